#include <gtest/gtest.h>

#include <random>

#include "lfss/nn.hpp"

using namespace lfss;
using namespace lfss::nn;

namespace {

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> nd;
    return Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
}

// Loss = 0.5 * |net(x) - target|^2; compares backprop against central
// differences on every parameter and every input.
void expect_gradients_match(const Sequential& net_in, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Sequential net = net_in;
    net.init(rng);
    // Non-zero biases so every path is exercised.
    for (Eigen::Index k = 0; k < net.param_count(); ++k)
        if (net.params()(k) == 0.0) net.params()(k) = 0.1 * random_vector(rng, 1)(0);
    const Eigen::VectorXd x = random_vector(rng, net.input_size());
    const Eigen::VectorXd target = random_vector(rng, net.output_size());

    auto loss = [&](const Sequential& n, const Eigen::VectorXd& in) {
        return 0.5 * (n.forward(in) - target).squaredNorm();
    };

    Trace tr;
    const Eigen::VectorXd y = net.forward(x, tr);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
    const Eigen::VectorXd dx = net.backward(tr, y - target, grad);

    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < net.param_count(); ++k) {
        Sequential p = net, m = net;
        p.params()(k) += h;
        m.params()(k) -= h;
        worst = std::max(worst, relative_error(grad(k), (loss(p, x) - loss(m, x)) / (2 * h)));
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        worst = std::max(worst, relative_error(dx(k), (loss(net, xp) - loss(net, xm)) / (2 * h)));
    }
    EXPECT_LT(worst, 1e-6);
}

}  // namespace

TEST(Nn, DenseForwardMatchesMatrixProduct) {
    Sequential net({Dense{3, 2}});
    // Column-major 2x3 weights then the bias.
    net.params() << 1, 4, 2, 5, 3, 6, 0.5, -0.5;
    const Eigen::VectorXd y = net.forward(Eigen::Vector3d(1, 1, 1));
    EXPECT_DOUBLE_EQ(y(0), 6.5);
    EXPECT_DOUBLE_EQ(y(1), 14.5);
}

TEST(Nn, ConvSamePaddingByHand) {
    Sequential net({Conv1d{1, 1, 3, 4}});
    net.params() << 1, 2, 3, 0.0;
    const Eigen::VectorXd y = net.forward(Eigen::Vector4d(1, 2, 3, 4));
    // y_t = x_{t-1} + 2 x_t + 3 x_{t+1}, zero outside.
    EXPECT_DOUBLE_EQ(y(0), 0 + 2 + 6);
    EXPECT_DOUBLE_EQ(y(1), 1 + 4 + 9);
    EXPECT_DOUBLE_EQ(y(3), 3 + 8 + 0);
}

TEST(Nn, PoolAndUpsample) {
    Sequential pool({AvgPool1d{1, 4, 2}});
    const Eigen::VectorXd p = pool.forward(Eigen::Vector4d(1, 3, 5, 9));
    EXPECT_DOUBLE_EQ(p(0), 2.0);
    EXPECT_DOUBLE_EQ(p(1), 7.0);
    Sequential up({Upsample1d{1, 2, 2}});
    const Eigen::VectorXd u = up.forward(Eigen::Vector2d(1, 2));
    EXPECT_EQ(u, Eigen::Vector4d(1, 1, 2, 2));
}

TEST(Nn, ZeroNetworkGivesActivationOfZero) {
    Sequential net({Dense{5, 3}, Act{Activation::tanh, 3}});
    EXPECT_TRUE(net.forward(Eigen::VectorXd::Ones(5)).isZero(0.0));
    Sequential sig({Dense{5, 3}, Act{Activation::sigmoid, 3}});
    EXPECT_TRUE(sig.forward(Eigen::VectorXd::Ones(5)).isConstant(0.5, 0.0));
}

TEST(Nn, ChainingMismatchIsRejected) {
    EXPECT_THROW(Sequential({Dense{4, 3}, Dense{2, 1}}), ValidationError);
    EXPECT_THROW(Sequential({Conv1d{1, 1, 2, 4}}), ValidationError);
    EXPECT_THROW(Sequential({AvgPool1d{1, 5, 2}}), ValidationError);
    Sequential net({Dense{4, 3}});
    EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST(Nn, DenseGradients) {
    expect_gradients_match(
        Sequential({Dense{6, 4}, Act{Activation::tanh, 4}, Dense{4, 3}, Act{Activation::sigmoid, 3}}),
        1);
}

TEST(Nn, ConvPoolUpsampleGradients) {
    expect_gradients_match(Sequential({Conv1d{2, 3, 3, 8}, Act{Activation::tanh, 24},
                                       AvgPool1d{3, 8, 2}, Upsample1d{3, 4, 2},
                                       Conv1d{3, 1, 5, 8}, Act{Activation::sigmoid, 8}}),
                           2);
}

TEST(Nn, ReluGradientsAwayFromKink) {
    expect_gradients_match(Sequential({Dense{5, 5}, Act{Activation::relu, 5}, Dense{5, 2}}), 3);
}

TEST(Nn, InitIsSeedDeterministicWithZeroBiases) {
    Sequential a({Dense{10, 4}}), b({Dense{10, 4}});
    std::mt19937_64 r1(9), r2(9);
    a.init(r1);
    b.init(r2);
    EXPECT_EQ(a.params(), b.params());
    EXPECT_TRUE(a.params().tail(4).isZero(0.0));
    const double lim = std::sqrt(6.0 / 14.0);
    EXPECT_LE(a.params().head(40).cwiseAbs().maxCoeff(), lim);
}

TEST(Nn, AdamFirstStepHasLearningRateMagnitude) {
    Adam opt;
    opt.learning_rate = 0.1;
    const Eigen::VectorXd d = opt.step(Eigen::Vector3d(2.0, -0.5, 1e-3));
    EXPECT_NEAR(d(0), -0.1, 1e-6);
    EXPECT_NEAR(d(1), 0.1, 1e-6);
    EXPECT_NEAR(d(2), -0.1, 1e-4);
}

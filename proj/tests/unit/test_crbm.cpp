#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crbm_oracle.hpp"
#include "lfss/autoencoder.hpp"
#include "lfss/crbm.hpp"

using namespace lfss;

namespace {

oracle::ToyCrbm as_toy(const CrbmParams& p) { return {p.W, p.a, p.b, p.sigma, p.A, p.B}; }

CrbmParams random_params(Eigen::Index v, Eigen::Index h, int hist, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    CrbmParams p = CrbmParams::zeros(v, h, hist);
    for (auto* m : {&p.W, &p.A, &p.B})
        for (Eigen::Index i = 0; i < m->size(); ++i) (*m)(i) = nd(rng);
    for (auto* x : {&p.a, &p.b})
        for (Eigen::Index i = 0; i < x->size(); ++i) (*x)(i) = nd(rng);
    return p;
}

// Consecutive scaled windows of one noisy sinusoid; history column k is the
// window immediately before visible column k.
void sinusoid_data(int count, std::uint64_t seed, Eigen::MatrixXd& vis, Eigen::MatrixXd& hist) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.05);
    const int m = 60;
    Eigen::VectorXd series((count + 1) * m);
    for (Eigen::Index t = 0; t < series.size(); ++t) series(t) = std::sin(0.07 * t) + nd(rng);
    vis.resize(m, count);
    hist.resize(m, count);
    for (int k = 0; k < count; ++k) {
        hist.col(k) = minmax_scale(series.segment(k * m, m));
        vis.col(k) = minmax_scale(series.segment((k + 1) * m, m));
    }
}

}  // namespace

TEST(Crbm, DynamicBiases) {
    auto p = random_params(4, 3, 1, 1, 0.5);
    p.A.setZero();
    p.B.setZero();
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(4);
    EXPECT_EQ(dynamic_biases(p, x).a, p.a);
    EXPECT_EQ(dynamic_biases(p, x).b, p.b);

    const auto q = random_params(4, 3, 1, 2, 0.5);
    EXPECT_EQ(dynamic_biases(q, Eigen::VectorXd::Zero(4)).a, q.a);

    auto r = CrbmParams::zeros(4, 3, 1);
    r.A(2, 1) = 0.75;
    const auto d = dynamic_biases(r, Eigen::VectorXd::Ones(4));
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.a(i), i == 2 ? 0.75 : 0.0);

    EXPECT_THROW(dynamic_biases(r, Eigen::VectorXd::Ones(3)), ValidationError);
}

TEST(Crbm, HiddenConditionalBasics) {
    const auto z = CrbmParams::zeros(60, 30, 1);
    const Eigen::VectorXd h = hidden_given_visible(z, Eigen::VectorXd::Constant(60, 0.3), Eigen::VectorXd::Zero(60));
    EXPECT_TRUE(h.isConstant(0.5, 0.0));
    auto big = z;
    big.b.setConstant(50.0);
    EXPECT_GT(hidden_given_visible(big, Eigen::VectorXd::Zero(60), Eigen::VectorXd::Zero(60)).minCoeff(),
              1.0 - 1e-15);
    EXPECT_THROW(hidden_given_visible(z, Eigen::VectorXd::Zero(59), Eigen::VectorXd::Zero(60)),
                 ValidationError);
}

TEST(Crbm, HiddenConditionalMatchesEnumeration) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 25; ++trial) {
        auto p = random_params(2, trial % 2 ? 1 : 3, 1, 100 + trial, 0.8);
        p.sigma << 0.7, 1.3;
        const Eigen::Vector2d v(nd(rng), nd(rng)), x(nd(rng), nd(rng));
        const Eigen::VectorXd got = hidden_given_visible(p, v, x);
        const Eigen::VectorXd want = oracle::enumerate_hidden_means(as_toy(p), x, v);
        EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Crbm, VisibleConditional) {
    const auto z = CrbmParams::zeros(60, 30, 1);
    const Eigen::VectorXd h = Eigen::VectorXd::Ones(30), x = Eigen::VectorXd::Zero(60);
    EXPECT_TRUE(visible_given_hidden(z, h, x, std::uint64_t{1}).mean.isZero(0.0));

    auto tiny = random_params(5, 3, 1, 4, 0.5);
    tiny.sigma.setConstant(1e-9);
    const auto d = visible_given_hidden(tiny, Eigen::Vector3d(1, 0, 1), Eigen::VectorXd::Ones(5), std::uint64_t{2});
    EXPECT_LE((d.sample - d.mean).cwiseAbs().maxCoeff(), 1e-7);

    // Monte Carlo: sample average within 3 sigma / sqrt(N) of the mean.
    auto p = random_params(3, 2, 1, 5, 0.5);
    p.sigma << 0.5, 1.0, 2.0;
    const Eigen::Vector2d hh(1, 0);
    const Eigen::Vector3d xx(0.1, -0.2, 0.3);
    std::mt19937_64 rng(6);
    const int n = 100000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), mean;
    for (int i = 0; i < n; ++i) {
        const auto s = visible_given_hidden(p, hh, xx, rng);
        sum += s.sample;
        mean = s.mean;
    }
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(sum(i) / n, mean(i), 3.0 * p.sigma(i) / std::sqrt(n));
}

TEST(Crbm, VisibleMeanMatchesQuadrature) {
    auto p = random_params(2, 1, 1, 7, 0.6);
    p.sigma << 0.8, 1.1;
    const Eigen::Vector2d x(0.4, -0.3);
    for (double hv : {0.0, 1.0}) {
        const Eigen::VectorXd h = Eigen::VectorXd::Constant(1, hv);
        const Eigen::Vector2d q = oracle::quadrature_visible_mean(as_toy(p), x, h);
        const Eigen::VectorXd mean = visible_given_hidden(p, h, x, std::uint64_t{0}).mean;
        EXPECT_NEAR(mean(0), q(0), 1e-8);
        EXPECT_NEAR(mean(1), q(1), 1e-8);
    }
}

TEST(Crbm, EnergyAgreesWithOracleEnergy) {
    auto p = random_params(2, 3, 1, 8, 0.7);
    p.sigma << 0.9, 1.4;
    const Eigen::Vector2d v(0.3, -1.2), x(0.5, 0.5);
    const Eigen::Vector3d h(1, 0, 1);
    EXPECT_NEAR(crbm_energy(p, v, h, x), oracle::toy_energy(as_toy(p), x, v, h), 1e-14);
}

TEST(Crbm, ZeroLearningRateLeavesParamsUnchanged) {
    Eigen::MatrixXd vis, hist;
    sinusoid_data(40, 1, vis, hist);
    const auto p = init_crbm(60, 30, 1, 3);
    CdConfig cfg;
    cfg.learning_rate = 0.0;
    std::mt19937_64 rng(1);
    const auto q = cd_k_update(p, vis, hist, {0, 1, 2, 3}, cfg, rng);
    EXPECT_EQ(q, p);
}

TEST(Crbm, TrainingReducesReconstructionError) {
    Eigen::MatrixXd vis, hist;
    sinusoid_data(128, 2, vis, hist);
    CdConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 0;
    const auto before = crbm_reconstruction_error(init_crbm(60, 30, 1, cfg.seed), vis, hist);
    const auto r = train_crbm(30, 1, cfg, vis, hist);
    ASSERT_EQ(r.error_history.size(), 50u);
    EXPECT_LT(r.error_history.back(), before);
    EXPECT_TRUE(r.params.all_finite());

    const auto again = train_crbm(30, 1, cfg, vis, hist);
    EXPECT_EQ(again.params, r.params);
    EXPECT_EQ(again.error_history, r.error_history);
}

TEST(Crbm, LongChainGradientSignMatchesExactGradient) {
    auto p = CrbmParams::zeros(2, 1, 1);
    p.W << 1.2, -0.8;
    p.a << 0.5, -0.3;
    p.b << -0.4;
    p.A << 0.3, 0.0, -0.2, 0.4;
    p.B << 0.5, -0.6;
    Eigen::MatrixXd vs(2, 4), xs(2, 4);
    vs << 1.5, -0.5, 2.0, 0.0, 1.0, 0.3, -1.0, 2.5;
    xs << 1.0, 0.0, -1.0, 0.5, 0.5, 1.0, 0.0, -0.5;
    const auto exact = oracle::exact_gradient(as_toy(p), vs, xs);

    // Replicate the batch so the chain noise averages out.
    const int reps = 5000;
    Eigen::MatrixXd big_v(2, 4 * reps), big_x(2, 4 * reps);
    for (int r = 0; r < reps; ++r) {
        big_v.middleCols(4 * r, 4) = vs;
        big_x.middleCols(4 * r, 4) = xs;
    }
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(4 * reps));
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = static_cast<Eigen::Index>(i);
    std::mt19937_64 rng(11);
    const auto cd = cd_gradient(p, big_v, big_x, cols, 100, rng);

    int compared = 0;
    auto check = [&](double e, double c) {
        if (std::abs(e) < 0.05) return;
        ++compared;
        EXPECT_EQ(e > 0, c > 0) << "exact " << e << " cd " << c;
    };
    for (Eigen::Index i = 0; i < 2; ++i) check(exact.W(0, i), cd.W(0, i));
    for (Eigen::Index i = 0; i < 2; ++i) check(exact.a(i), cd.a(i));
    check(exact.b(0), cd.b(0));
    for (Eigen::Index i = 0; i < 4; ++i) check(exact.A(i), cd.A(i));
    for (Eigen::Index i = 0; i < 2; ++i) check(exact.B(0, i), cd.B(0, i));
    EXPECT_GE(compared, 6);
}

TEST(Crbm, StaticReduction) {
    auto p = random_params(6, 4, 1, 9, 0.5);
    p.A.setZero();
    p.B.setZero();
    CrbmParams s = CrbmParams::zeros(6, 4, 0);
    s.W = p.W;
    s.a = p.a;
    s.b = p.b;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(6, [&] { return nd(rng); });
        const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(6, [&] { return nd(rng); });
        EXPECT_EQ(hidden_given_visible(p, v, x), hidden_given_visible(s, v, Eigen::VectorXd(0)));
        const Eigen::Vector4d h(1, 0, 0, 1);
        EXPECT_EQ(visible_given_hidden(p, h, x, std::uint64_t{5}).sample,
                  visible_given_hidden(s, h, Eigen::VectorXd(0), std::uint64_t{5}).sample);
    }
}

TEST(Crbm, FeatureShapeRangeAndDeterminism) {
    const auto p = init_crbm(60, 30, 1, 4);
    Eigen::MatrixXd vis, hist;
    sinusoid_data(3, 5, vis, hist);
    const Eigen::VectorXd f = crbm_feature(p, vis.col(0), hist.col(0));
    EXPECT_EQ(f.size(), 30);
    EXPECT_GT(f.minCoeff(), 0.0);
    EXPECT_LT(f.maxCoeff(), 1.0);
    EXPECT_EQ(f, crbm_feature(p, vis.col(0), hist.col(0)));
}

TEST(Crbm, DivergenceAndValidation) {
    Eigen::MatrixXd vis, hist;
    sinusoid_data(32, 6, vis, hist);
    CdConfig cfg;
    cfg.learning_rate = 1e300;
    cfg.epochs = 2;
    EXPECT_THROW(train_crbm(30, 1, cfg, vis * 1e10, hist), DivergenceError);
    cfg.learning_rate = 0.01;
    cfg.k = 0;
    EXPECT_THROW(train_crbm(30, 1, cfg, vis, hist), ValidationError);
    auto bad = CrbmParams::zeros(3, 2, 1);
    bad.sigma(1) = 0.0;
    EXPECT_THROW(validate(bad), ValidationError);
}

TEST(Crbm, JsonRoundTrip) {
    const auto p = random_params(5, 3, 1, 13, 0.4);
    const auto back = crbm_from_json(json::parse(crbm_to_json(p, "h").dump()));
    EXPECT_EQ(back, p);
    const auto s = CrbmParams::zeros(5, 3, 0);
    EXPECT_EQ(crbm_from_json(json::parse(crbm_to_json(s, "h").dump())), s);
}

#include <gtest/gtest.h>

#include <random>

#include "lfss/benchmarks.hpp"

using namespace lfss;

namespace {

/// Exact projection by enumerating supports: for each support S the
/// constrained minimiser is v_S shifted by a common constant; keep the
/// closest feasible candidate.
Eigen::VectorXd project_by_enumeration(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    Eigen::VectorXd best;
    double best_dist = INFINITY;
    for (long mask = 1; mask < (1L << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask >> i & 1) {
                sum += v(i);
                ++count;
            }
        const double shift = (sum - 1.0) / count;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        bool feasible = true;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask >> i & 1) {
                w(i) = v(i) - shift;
                feasible = feasible && w(i) >= 0.0;
            }
        if (feasible && (w - v).squaredNorm() < best_dist) {
            best_dist = (w - v).squaredNorm();
            best = w;
        }
    }
    return best;
}

}  // namespace

TEST(Benchmarks, SimplexProjectionHandCases) {
    const Eigen::Vector3d on(0.2, 0.3, 0.5);
    EXPECT_LE((simplex_project(on) - on).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(simplex_project(Eigen::Vector2d(2, 0)), Eigen::Vector2d(1, 0));
    EXPECT_LE((simplex_project(Eigen::Vector2d(0.5, 0.5 + 1.0)) - Eigen::Vector2d(0, 1)).norm(), 1e-15);
    EXPECT_LE((simplex_project(Eigen::Vector3d::Zero()) - Eigen::Vector3d::Constant(1.0 / 3)).norm(), 1e-15);
    EXPECT_THROW(simplex_project(Eigen::Vector2d(NAN, 1)), ValidationError);
}

TEST(Benchmarks, SimplexProjectionMatchesSupportEnumeration) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 2 + trial % 6;
        const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
        const Eigen::VectorXd w = simplex_project(v);
        EXPECT_LE((w - project_by_enumeration(v)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(w.sum(), 1.0, 1e-12);
        EXPECT_GE(w.minCoeff(), 0.0);
    }
}

TEST(Benchmarks, SimplexProjectionBeatsDenseGridOnFourSimplex) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int steps = 20;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(5, [&] { return nd(rng); });
        const double d = (simplex_project(v) - v).squaredNorm();
        double grid_best = INFINITY;
        for (int a = 0; a <= steps; ++a)
            for (int b = 0; a + b <= steps; ++b)
                for (int c = 0; a + b + c <= steps; ++c)
                    for (int e = 0; a + b + c + e <= steps; ++e) {
                        Eigen::VectorXd g(5);
                        g << a, b, c, e, steps - a - b - c - e;
                        grid_best = std::min(grid_best, (g / steps - v).squaredNorm());
                    }
        EXPECT_LE(d, grid_best + 1e-12);
    }
}

TEST(Benchmarks, RsvConventions) {
    EXPECT_EQ(rsv(Eigen::Vector3d(1, 2, 3)), 100.0);
    EXPECT_EQ(rsv(Eigen::Vector3d(3, 2, 1)), 0.0);
    EXPECT_EQ(rsv(Eigen::Vector3d(2, 2, 2)), 50.0);
    EXPECT_DOUBLE_EQ(rsv(Eigen::Vector4d(1, 5, 3, 2)), 25.0);
    EXPECT_THROW(rsv(Eigen::VectorXd()), ValidationError);
}

TEST(Benchmarks, KdRecursionArithmetic) {
    KdState s;
    for (int k = 0; k < 10; ++k) s = kd_update(s, 50.0);
    EXPECT_EQ(s.K, 50.0);
    EXPECT_EQ(s.D, 50.0);

    const KdState one = kd_update(KdState{}, 100.0);
    EXPECT_NEAR(one.K, 200.0 / 3.0, 1e-12);
    EXPECT_NEAR(one.D, (200.0 / 3.0) / 3.0 + 100.0 / 3.0, 1e-12);

    // Contraction toward a constant RSV: |K_t - r| = (2/3)|K_{t-1} - r|.
    KdState c;
    for (int k = 0; k < 40; ++k) {
        const KdState next = kd_update(c, 80.0);
        EXPECT_NEAR(std::abs(next.K - 80.0), 2.0 / 3.0 * std::abs(c.K - 80.0), 1e-12);
        c = next;
    }
    EXPECT_NEAR(c.K, 80.0, 1e-5);
    EXPECT_NEAR(c.D, 80.0, 1e-4);
}

TEST(Benchmarks, BuySignalFiresOnceAtCrossover) {
    KdState s;
    EXPECT_THROW(buy_signal(s), ValidationError);
    s = kd_update(s, 50.0);
    EXPECT_THROW(buy_signal(s), ValidationError);
    // RSV path: falls (K below D), then jumps up once and stays high.
    const std::vector<double> path{50, 20, 20, 20, 20, 90, 90, 90, 90, 90};
    double K = 50, D = 50, pK = 50, pD = 50;
    int fires = 0, fired_at = -1;
    KdState k;
    for (std::size_t t = 0; t < path.size(); ++t) {
        pK = K;
        pD = D;
        K = path[t] / 3 + 2 * K / 3;
        D = K / 3 + 2 * D / 3;
        k = kd_update(k, path[t]);
        EXPECT_DOUBLE_EQ(k.K, K);
        EXPECT_DOUBLE_EQ(k.D, D);
        if (t >= 1 && buy_signal(k)) {
            ++fires;
            fired_at = static_cast<int>(t);
        }
        EXPECT_EQ(t >= 1 && buy_signal(k), t >= 1 && pK <= pD && K > D);
    }
    EXPECT_EQ(fires, 1);
    EXPECT_EQ(fired_at, 5);
}

TEST(Benchmarks, KAlwaysBelowDNeverSignals) {
    KdState s;
    for (int t = 0; t < 30; ++t) {
        s = kd_update(s, 10.0);
        if (s.updates >= 2) EXPECT_FALSE(buy_signal(s));
    }
}

TEST(Benchmarks, MeanVarianceCases) {
    // Symmetric uncorrelated pair with equal means.
    Eigen::MatrixXd r(4, 2);
    r << 0.2, 0.0, 0.0, 0.2, 0.2, 0.0, 0.0, 0.2;
    const Eigen::VectorXd w = mean_variance_weights(r);
    EXPECT_NEAR(w(0), 0.5, 1e-12);
    EXPECT_NEAR(w(1), 0.5, 1e-12);

    Eigen::MatrixXd neg(4, 2);
    neg << 0.1, -0.1, 0.3, -0.1, 0.3, 0.0, 0.1, 0.0;
    EXPECT_LT(mean_variance_weights(neg)(1), 0.0);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.001, 0.02);
    const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(60, 3, [&] { return nd(rng); });
    // Direct solve written out independently.
    const Eigen::VectorXd mu = x.colwise().mean().transpose();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
    for (Eigen::Index t = 0; t < 60; ++t) {
        const Eigen::VectorXd d = x.row(t).transpose() - mu;
        cov += d * d.transpose() / 59.0;
    }
    cov += Eigen::MatrixXd::Identity(3, 3) * 1e-6 * cov.trace() / 3.0;
    Eigen::VectorXd direct = cov.fullPivLu().solve(mu);
    direct /= direct.cwiseAbs().sum();
    EXPECT_LE((mean_variance_weights(x) - direct).cwiseAbs().maxCoeff(), 1e-10);

    // Scaling returns keeps the sign pattern.
    const Eigen::VectorXd a = mean_variance_weights(x), b = mean_variance_weights(7.5 * x);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(a(i) > 0, b(i) > 0);

    EXPECT_THROW(mean_variance_weights(Eigen::MatrixXd::Ones(3, 3)), ValidationError);
    EXPECT_THROW(mean_variance_weights(Eigen::MatrixXd::Zero(10, 2)), NumericalError);
}

TEST(Benchmarks, ImvkAllocations) {
    std::vector<bool> sig(15, false);
    sig[2] = sig[7] = sig[11] = true;
    const Eigen::VectorXd w = imvk_allocate(ImvkMode::aggressive, sig, Eigen::VectorXd());
    EXPECT_EQ(w(0), 0.0);
    EXPECT_DOUBLE_EQ(w(3), 1.0 / 3);
    EXPECT_DOUBLE_EQ(w(8), 1.0 / 3);
    EXPECT_DOUBLE_EQ(w(12), 1.0 / 3);
    EXPECT_NEAR(w.sum(), 1.0, 1e-15);

    const Eigen::VectorXd cash = imvk_allocate(ImvkMode::aggressive, std::vector<bool>(4, false), Eigen::VectorXd());
    EXPECT_EQ(cash, (Eigen::VectorXd(5) << 1, 0, 0, 0, 0).finished());

    const Eigen::VectorXd m = imvk_allocate(ImvkMode::moderate, {true, true}, Eigen::Vector2d(0.6, -0.4));
    EXPECT_EQ(m, Eigen::Vector3d(0, 1, 0));
    EXPECT_THROW(imvk_allocate(ImvkMode::moderate, {true}, Eigen::Vector2d(1, 1)), ValidationError);
}

TEST(Benchmarks, EqualWeight) {
    const Eigen::VectorXd w = ew_allocate(15);
    EXPECT_EQ(w(0), 0.0);
    for (Eigen::Index i = 1; i <= 15; ++i) EXPECT_EQ(w(i), 1.0 / 15);
    EXPECT_NEAR(w.sum(), 1.0, 1e-15);
    EXPECT_EQ(ew_allocate(1), Eigen::Vector2d(0, 1));
    EXPECT_THROW(ew_allocate(0), ValidationError);
}

TEST(Benchmarks, WmamrHandInstance) {
    // Closes: asset 0 flat at 10, asset 1 fell from 12 to 8.
    Eigen::MatrixXd c(3, 2);
    c << 10, 12, 10, 10, 10, 8;
    const Eigen::Vector2d w(0.5, 0.5);
    // x = (1, 10/8 = 1.25), mean 1.125, deviation (-0.125, 0.125).
    // tau = (5 - 1.125) / 0.03125 = 124, so w + tau*dev = (-15, 16) -> (0, 1).
    EXPECT_EQ(wmamr_step(w, c, 5.0), Eigen::Vector2d(0, 1));
    // Small epsilon: tau = (1.13 - 1.125) / 0.03125 = 0.16, step (0.48, 0.52).
    const Eigen::VectorXd small = wmamr_step(w, c, 1.13);
    EXPECT_NEAR(small(0), 0.48, 1e-12);
    EXPECT_NEAR(small(1), 0.52, 1e-12);
    // Prediction already meets the margin: unchanged.
    EXPECT_EQ(wmamr_step(w, c, 1.0), w);
    // Zero-variance prediction: no update.
    EXPECT_EQ(wmamr_step(w, Eigen::MatrixXd::Constant(3, 2, 4.0), 5.0), w);
}

TEST(Benchmarks, EveryStrategyStaysOnSimplex) {
    const auto s = synth_gbm(4, 6, 400, std::vector<double>(6, 0.05), std::vector<double>(6, 0.4));
    const BenchmarkOptions o;
    for (Benchmark b : all_benchmarks()) {
        const Eigen::Index first = std::max<Eigen::Index>(60, benchmark_first_index(b, o));
        const auto ws = run_benchmark(b, s, first, 398, o);
        EXPECT_EQ(static_cast<Eigen::Index>(ws.size()), 398 - first + 1);
        for (const auto& w : ws) {
            ASSERT_EQ(w.size(), 7);
            EXPECT_NEAR(w.sum(), 1.0, 1e-10) << to_string(b);
            EXPECT_GE(w.minCoeff(), -1e-12) << to_string(b);
        }
    }
    EXPECT_THROW(run_benchmark(Benchmark::imvk_moderate, s, 10, 20, o), IndexError);
}

TEST(Benchmarks, ImvkSignalsDoNotDependOnStartIndex) {
    const auto s = synth_gbm(5, 3, 300, std::vector<double>(3, 0.0), std::vector<double>(3, 0.5));
    const auto full = run_benchmark(Benchmark::imvk_aggressive, s, 60, 250);
    const auto tail = run_benchmark(Benchmark::imvk_aggressive, s, 200, 250);
    for (std::size_t k = 0; k < tail.size(); ++k) EXPECT_EQ(tail[k], full[140 + k]);
    // Some signal fires somewhere on a volatile path.
    bool any = false;
    for (const auto& w : full) any = any || w(0) < 1.0;
    EXPECT_TRUE(any);
}

TEST(Benchmarks, WeightsCsvLayout) {
    const auto s = synth_gbm(6, 2, 10, {0.0, 0.0}, {0.1, 0.1});
    const std::string csv = weights_csv(s, 3, {ew_allocate(2)});
    EXPECT_EQ(csv, "date,cash,S00,S01\n" + s.dates[3] + ",0,0.5,0.5\n");
}

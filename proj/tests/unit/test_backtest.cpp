#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "lfss/backtest.hpp"

using namespace lfss;

namespace {

OhlcSeries closes(const Eigen::MatrixXd& c, double rf = 0.0) {
    SynthOptions opt;
    opt.risk_free_annual = rf;
    return series_from_closes(c, opt);
}

ActionSource constant(const Eigen::VectorXd& a) {
    return [a](Eigen::Index, const Eigen::VectorXd&) { return a; };
}

BacktestResult from_pv(const std::vector<double>& pv) {
    BacktestResult r;
    r.pv = pv;
    for (std::size_t k = 1; k < pv.size(); ++k) r.rewards.push_back(std::log(pv[k] / pv[k - 1]));
    return r;
}

}  // namespace

TEST(Backtest, ConstantPricesKeepCapital) {
    const auto s = closes(Eigen::MatrixXd::Constant(20, 3, 7.0));
    const auto cash = run_backtest("cash", constant(Eigen::Vector4d(1, 0, 0, 0)), s, 0, 18, 0.002, 10000.0);
    for (double v : cash.pv) EXPECT_EQ(v, 10000.0);
    const auto ew = run_backtest("ew", constant(Eigen::Vector4d(0, 1.0 / 3, 1.0 / 3, 1.0 / 3)), s, 0, 18, 0.0, 10000.0);
    EXPECT_EQ(ew.pv.back(), 10000.0);
    EXPECT_EQ(cash.steps(), 19u);
    EXPECT_EQ(cash.dates.front(), s.dates[0]);
    EXPECT_EQ(cash.dates.back(), s.dates[19]);
}

TEST(Backtest, ScriptedScenarioMatchesBruteForce) {
    Eigen::MatrixXd c(6, 3);
    c << 10, 20, 30,
         11, 19, 30,
         12, 21, 29,
         11, 22, 31,
         13, 20, 33,
         12, 23, 32;
    const double rf = 0.05, cost = 0.002, pv0 = 10000.0;
    const auto s = closes(c, rf);
    std::vector<Eigen::VectorXd> script{Eigen::Vector4d(0.1, 0.3, 0.3, 0.3), Eigen::Vector4d(0.0, 0.5, 0.2, 0.3),
                                        Eigen::Vector4d(0.25, 0.25, 0.25, 0.25), Eigen::Vector4d(0.0, 0.0, 1.0, 0.0),
                                        Eigen::Vector4d(0.4, 0.1, 0.2, 0.3)};
    const auto r = run_backtest("script", fixed_actions(script, 0), s, 0, 4, cost, pv0);
    ASSERT_EQ(r.steps(), 5u);

    // Spreadsheet-style recomputation with plain loops.
    const double cash_growth = std::pow(1.0 + rf, 1.0 / 252.0);
    double pv = pv0;
    double w[4] = {1, 0, 0, 0};
    for (int t = 0; t < 5; ++t) {
        const Eigen::VectorXd& a = script[static_cast<std::size_t>(t)];
        double gross = a(0) * cash_growth, turnover = std::abs(a(0) - w[0]);
        for (int i = 0; i < 3; ++i) {
            gross += a(i + 1) * c(t + 1, i) / c(t, i);
            turnover += std::abs(a(i + 1) - w[i + 1]);
        }
        const double factor = gross - cost * turnover;
        pv *= factor;
        EXPECT_NEAR(r.rewards[static_cast<std::size_t>(t)], std::log(factor), 1e-12 * std::abs(std::log(factor)) + 1e-16);
        EXPECT_NEAR(r.pv[static_cast<std::size_t>(t) + 1] / pv, 1.0, 1e-12);
        EXPECT_NEAR(r.turnover[static_cast<std::size_t>(t)], turnover, 1e-15);
        for (int i = 0; i < 4; ++i) w[i] = a(i);
    }
    const double sum = std::accumulate(r.rewards.begin(), r.rewards.end(), 0.0);
    EXPECT_NEAR(r.pv.back() / (pv0 * std::exp(sum)), 1.0, 1e-10);
}

TEST(Backtest, SingleStepCashWithZeroRate) {
    const auto s = closes(Eigen::MatrixXd::Constant(2, 1, 5.0));
    const auto r = run_backtest("cash", constant(Eigen::Vector2d(1, 0)), s, 0, 0, 0.002, 10000.0);
    EXPECT_EQ(r.pv, (std::vector<double>{10000.0, 10000.0}));
}

TEST(Backtest, ZeroCostConstantMixes) {
    const auto s = synth_gbm(1, 2, 80, {0.1, -0.05}, {0.3, 0.2});
    // All-in on one asset is buy and hold.
    const auto hold = run_backtest("hold", constant(Eigen::Vector3d(0, 1, 0)), s, 0, 78, 0.0, 10000.0);
    EXPECT_NEAR(hold.pv.back() / (10000.0 * s.close(79, 0) / s.close(0, 0)), 1.0, 1e-10);
    // A rebalanced mix compounds the mixed relatives.
    const Eigen::Vector3d mix(0.2, 0.5, 0.3);
    const auto r = run_backtest("mix", constant(mix), s, 0, 78, 0.0, 10000.0);
    double pv = 10000.0;
    for (std::size_t t = 1; t < 80; ++t) pv *= mix.dot(price_relatives(s, t));
    EXPECT_NEAR(r.pv.back() / pv, 1.0, 1e-10);
}

TEST(Backtest, HigherCostNeverHelps) {
    const auto s = synth_gbm(2, 3, 60, {0, 0, 0}, {0.3, 0.3, 0.3});
    std::vector<Eigen::VectorXd> flip;
    for (int t = 0; t < 58; ++t)
        flip.push_back(t % 2 ? Eigen::Vector4d(0.1, 0.6, 0.2, 0.1) : Eigen::Vector4d(0.3, 0.1, 0.1, 0.5));
    double prev = INFINITY;
    for (double c : {0.0, 0.001, 0.002, 0.01, 0.05}) {
        const auto r = run_backtest("flip", fixed_actions(flip, 0), s, 0, 57, c, 10000.0);
        EXPECT_LT(r.pv.back(), prev);
        prev = r.pv.back();
        const double sum = std::accumulate(r.rewards.begin(), r.rewards.end(), 0.0);
        EXPECT_NEAR(r.pv.back() / (10000.0 * std::exp(sum)), 1.0, 1e-10);
    }
}

TEST(Backtest, BankruptcyHaltsWithPartialResult) {
    Eigen::MatrixXd c(6, 2);
    c << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1;
    const auto s = closes(c);
    std::vector<Eigen::VectorXd> flip{Eigen::Vector3d(0.5, 0.5, 0), Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0)};
    const auto r = run_backtest("flip", fixed_actions(flip, 0), s, 0, 2, 0.6, 10000.0);
    EXPECT_TRUE(r.bankrupt);
    EXPECT_EQ(r.steps(), 1u);
    EXPECT_EQ(r.pv.size(), 2u);
    EXPECT_FALSE(compute_metrics(r, 252).annual_volatility.has_value());
}

TEST(Backtest, OffSimplexActionIsRejected) {
    const auto s = closes(Eigen::MatrixXd::Constant(5, 1, 1.0));
    EXPECT_THROW(run_backtest("bad", constant(Eigen::Vector2d(0.7, 0.7)), s, 0, 2, 0.0, 1.0), ValidationError);
    EXPECT_THROW(run_backtest("bad", constant(Eigen::Vector2d(1, 0)), s, 0, 4, 0.0, 1.0), ValidationError);
}

TEST(Backtest, AnnualReturnConventions) {
    std::vector<double> pv(253);
    for (int k = 0; k <= 252; ++k) pv[static_cast<std::size_t>(k)] = 10000.0 * std::pow(2.0, k / 252.0);
    EXPECT_NEAR(annual_return_geometric(from_pv(pv), 252), 1.0, 1e-12);
    EXPECT_EQ(annual_return_geometric(from_pv(std::vector<double>(10, 5.0)), 252), 0.0);
    // 10000 -> 29440 over four years of daily steps.
    std::vector<double> four{10000.0};
    for (int k = 1; k <= 4 * 252; ++k) four.push_back(10000.0 * std::pow(2.944, k / (4.0 * 252)));
    EXPECT_NEAR(annual_return_geometric(from_pv(four), 252), std::pow(2.944, 0.25) - 1.0, 1e-12);
    EXPECT_NEAR(annual_return_geometric(from_pv(four), 252), 0.31, 0.005);
    EXPECT_DOUBLE_EQ(annual_return_arithmetic({0.01, 0.03}, 252), 0.02 * 252);
}

TEST(Backtest, VolatilityClosedForms) {
    EXPECT_EQ(annual_volatility(std::vector<double>(10, 0.004), 252), 0.0);
    std::vector<double> alt;
    for (int k = 0; k < 100; ++k) alt.push_back(k % 2 ? -0.01 : 0.01);
    EXPECT_NEAR(annual_volatility(alt, 252), 0.01 * std::sqrt(252.0), 1e-12);
    EXPECT_NEAR(0.01 * std::sqrt(252.0), 0.1587, 1e-4);
    std::vector<double> doubled;
    const std::vector<double> base{0.01, -0.02, 0.005, 0.03};
    for (double x : base) doubled.push_back(2 * x);
    EXPECT_NEAR(annual_volatility(doubled, 252), 2 * annual_volatility(base, 252), 1e-14);
    EXPECT_THROW(annual_volatility({0.1, 0.2}, 252), ValidationError);
}

TEST(Backtest, SharpeReproducesPublishedRatios) {
    struct Row {
        double ret, vol, ratio;
    };
    // Annual return, volatility and Sharpe ratio of the six published agent rows.
    const Row rows[] = {{0.486, 0.254, 1.91}, {0.575, 0.252, 2.28}, {0.684, 0.256, 2.67},
                        {0.458, 0.257, 1.78}, {0.722, 0.254, 2.84}, {0.503, 0.255, 1.97}};
    for (const Row& r : rows) EXPECT_NEAR(*sharpe(r.ret, r.vol), r.ratio, 0.01);
    EXPECT_NEAR(*sharpe(0.486, 0.254), 1.913, 5e-4);
    EXPECT_FALSE(sharpe(0.1, 0.0).has_value());
}

TEST(Backtest, SortinoConventions) {
    EXPECT_FALSE(downside_deviation({0.01, 0.02, 0.03}, 252).has_value());
    EXPECT_FALSE(sortino(0.3, std::nullopt).has_value());
    std::vector<double> alt;
    for (int k = 0; k < 50; ++k) alt.push_back(k % 2 ? -0.02 : 0.02);
    const double vol = annual_volatility(alt, 252);
    const auto down = downside_deviation(alt, 252);
    ASSERT_TRUE(down.has_value());
    EXPECT_NEAR(*down, vol / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(*sortino(0.3, down), std::sqrt(2.0) * *sharpe(0.3, vol), 1e-6);
}

TEST(Backtest, MetricsAndReportFiles) {
    const auto s = synth_gbm(3, 2, 120, {0.1, 0.0}, {0.2, 0.3});
    std::vector<Metrics> all;
    std::vector<std::string> names;
    std::vector<std::vector<double>> pvs;
    for (int k = 0; k < 11; ++k) {
        const double a = k / 10.0;
        const auto r = run_backtest("m" + std::to_string(k), constant(Eigen::Vector3d(0, a, 1 - a)), s, 0, 118, 0.002, 10000.0);
        all.push_back(compute_metrics(r, 252));
        names.push_back(r.method);
        pvs.push_back(r.pv);
    }
    const json j = metrics_report_json(all, "deadbeef");
    EXPECT_EQ(j.at("results").size(), 11u);
    for (const char* key : {"method", "pv_end", "annual_return_geometric", "annual_return_arithmetic",
                            "annual_volatility", "sharpe", "sortino", "turnover_total"})
        EXPECT_TRUE(j["results"][0].contains(key)) << key;
    const std::string csv = metrics_csv(all);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
    EXPECT_EQ(csv, metrics_csv(all));
    EXPECT_EQ(j.dump(), metrics_report_json(all, "deadbeef").dump());
    const std::string svg = pv_chart_svg(names, pvs);
    EXPECT_EQ(svg, pv_chart_svg(names, pvs));
    EXPECT_EQ(std::count(svg.begin(), svg.end(), 'p') > 0, true);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_NE(svg.find(">m10</text>"), std::string::npos);

    const std::vector<Metrics> one{all.front()};
    EXPECT_EQ(metrics_report_json(one, "x").at("results").size(), 1u);
    EXPECT_THROW(metrics_report_json({}, "x"), ValidationError);
}

TEST(Backtest, UndefinedMetricsSerialiseAsNull) {
    const auto s = closes(Eigen::MatrixXd::Constant(10, 1, 3.0));
    const auto r = run_backtest("flat", constant(Eigen::Vector2d(1, 0)), s, 0, 8, 0.0, 100.0);
    const Metrics m = compute_metrics(r, 252);
    EXPECT_FALSE(m.sharpe.has_value());
    const json j = metrics_to_json(m);
    EXPECT_TRUE(j.at("sharpe").is_null());
    EXPECT_TRUE(j.at("sortino").is_null());
    EXPECT_NE(metrics_csv({m}).find(",,"), std::string::npos);
}

TEST(Backtest, ResultRoundTrip) {
    const auto s = synth_gbm(4, 2, 30, {0.0, 0.0}, {0.2, 0.2});
    const auto r = run_backtest("EW", constant(Eigen::Vector3d(0, 0.5, 0.5)), s, 0, 28, 0.002, 10000.0);
    const auto back = backtest_from_json(json::parse(backtest_to_json(r, "h").dump()));
    EXPECT_EQ(back.pv, r.pv);
    EXPECT_EQ(back.rewards, r.rewards);
    EXPECT_EQ(back.weights.size(), r.weights.size());
    EXPECT_EQ(back.dates, r.dates);
}

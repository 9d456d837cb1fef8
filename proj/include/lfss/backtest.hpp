#pragma once

// Cost-aware portfolio accounting and performance metrics, plus the report
// writers (metrics JSON and CSV, portfolio-value SVG chart).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lfss/container.hpp"
#include "lfss/error.hpp"
#include "lfss/market_data.hpp"
#include "lfss/policy.hpp"

namespace lfss {

/// Chooses the weights held over (t, t+1] given the weights held before.
using ActionSource = std::function<Eigen::VectorXd(Eigen::Index t, const Eigen::VectorXd& prev_weights)>;

struct BacktestResult {
    std::string method;
    std::vector<std::string> dates;        // date of each pv point
    std::vector<double> pv;                // pv[0] is the initial capital
    std::vector<double> rewards;           // log growth of each step
    std::vector<Eigen::VectorXd> weights;  // action of each step
    std::vector<double> turnover;          // sum |a - w| of each step
    bool bankrupt = false;

    std::size_t steps() const noexcept { return rewards.size(); }
};

/// Runs actions at t = first..last. Each step earns price_relatives(t + 1);
/// the book starts in cash. A bankruptcy halts the run and flags the result.
inline BacktestResult run_backtest(const std::string& method, const ActionSource& strategy, const OhlcSeries& s,
                                   Eigen::Index first, Eigen::Index last, double cost, double pv0) {
    if (!(cost >= 0.0 && cost < 1.0)) throw ValidationError("transaction cost must lie in [0, 1)");
    if (!(pv0 > 0.0) || !std::isfinite(pv0)) throw ValidationError("initial capital must be positive");
    const auto T = static_cast<Eigen::Index>(s.length());
    if (first < 0 || last < first || last + 1 >= T)
        throw ValidationError("backtest range [" + std::to_string(first) + ", " + std::to_string(last) +
                              "] needs a following price row inside " + std::to_string(T) + " rows");
    const auto n = static_cast<Eigen::Index>(s.asset_count());
    BacktestResult out;
    out.method = method;
    out.pv.push_back(pv0);
    out.dates.push_back(s.dates[static_cast<std::size_t>(first)]);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
    w(0) = 1.0;
    for (Eigen::Index t = first; t <= last; ++t) {
        const Eigen::VectorXd a = strategy(t, w);
        if (a.size() != n + 1 || !on_simplex(a, 1e-9))
            throw ValidationError(method + " emitted a weight vector off the simplex at t=" + std::to_string(t));
        const Eigen::VectorXd y = price_relatives(s, static_cast<std::size_t>(t + 1));
        double r = 0.0;
        try {
            r = reward(a, y, w, cost);
        } catch (const BankruptcyError&) {
            out.bankrupt = true;
            break;
        }
        out.rewards.push_back(r);
        out.turnover.push_back((a - w).cwiseAbs().sum());
        out.weights.push_back(a);
        out.pv.push_back(out.pv.back() * std::exp(r));
        out.dates.push_back(s.dates[static_cast<std::size_t>(t + 1)]);
        w = a;
    }
    return out;
}

/// Replays a precomputed action list for t = first, first + 1, ...
inline ActionSource fixed_actions(std::vector<Eigen::VectorXd> actions, Eigen::Index first) {
    return [actions = std::move(actions), first](Eigen::Index t, const Eigen::VectorXd&) {
        const Eigen::Index k = t - first;
        if (k < 0 || k >= static_cast<Eigen::Index>(actions.size()))
            throw IndexError("no precomputed action for t=" + std::to_string(t));
        return actions[static_cast<std::size_t>(k)];
    };
}

/// The trained policy acting on freshly built states with its own previous
/// action fed back.
inline ActionSource agent_actions(const PolicyNetwork& net, const FeatureBuilder& fb) {
    return [&net, &fb](Eigen::Index t, const Eigen::VectorXd& prev) { return act(net, fb.build_state(t, prev)); };
}

// ---------------------------------------------------------------------------
// Metrics

inline std::vector<double> simple_returns(const BacktestResult& r) {
    std::vector<double> out;
    out.reserve(r.rewards.size());
    for (double x : r.rewards) out.push_back(std::expm1(x));
    return out;
}

inline double annual_return_geometric(const BacktestResult& r, int periods_per_year) {
    if (r.pv.size() < 2) throw ValidationError("annual return needs at least two portfolio values");
    return std::pow(r.pv.back() / r.pv.front(), static_cast<double>(periods_per_year) / static_cast<double>(r.steps())) -
           1.0;
}

/// Mean simple return per step times periods per year.
inline double annual_return_arithmetic(const std::vector<double>& returns, int periods_per_year) {
    if (returns.empty()) throw ValidationError("annual return needs at least one step");
    double sum = 0.0;
    for (double x : returns) sum += x;
    return sum / static_cast<double>(returns.size()) * periods_per_year;
}

/// Population standard deviation of simple returns, annualised.
inline double annual_volatility(const std::vector<double>& returns, int periods_per_year) {
    if (returns.size() < 3) throw ValidationError("annual volatility needs at least three steps");
    const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
    if (*lo == *hi) return 0.0;  // exact, instead of rounding noise from the mean
    double mean = 0.0;
    for (double x : returns) mean += x;
    mean /= static_cast<double>(returns.size());
    double ss = 0.0;
    for (double x : returns) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(returns.size())) * std::sqrt(static_cast<double>(periods_per_year));
}

/// Root mean square of min(r, 0) over all steps, annualised; empty when no
/// step lost money.
inline std::optional<double> downside_deviation(const std::vector<double>& returns, int periods_per_year) {
    double ss = 0.0;
    bool any = false;
    for (double x : returns)
        if (x < 0.0) {
            ss += x * x;
            any = true;
        }
    if (!any) return std::nullopt;
    return std::sqrt(ss / static_cast<double>(returns.size())) * std::sqrt(static_cast<double>(periods_per_year));
}

/// Return over volatility with a zero risk-free rate; empty for zero volatility.
inline std::optional<double> sharpe(double annual_return, double annual_vol) {
    if (!(annual_vol > 0.0)) return std::nullopt;
    return annual_return / annual_vol;
}

inline std::optional<double> sortino(double annual_return, const std::optional<double>& downside) {
    if (!downside || !(*downside > 0.0)) return std::nullopt;
    return annual_return / *downside;
}

struct Metrics {
    std::string method;
    double pv_end = 0.0;
    std::optional<double> annual_return_geometric;
    std::optional<double> annual_return_arithmetic;
    std::optional<double> annual_volatility;
    std::optional<double> sharpe;
    std::optional<double> sortino;
    double turnover_total = 0.0;
    std::size_t steps = 0;
    bool bankrupt = false;
};

/// Metrics of one run; anything a short or degenerate run cannot define stays empty.
inline Metrics compute_metrics(const BacktestResult& r, int periods_per_year) {
    Metrics m;
    m.method = r.method;
    m.pv_end = r.pv.back();
    m.steps = r.steps();
    m.bankrupt = r.bankrupt;
    for (double x : r.turnover) m.turnover_total += x;
    const std::vector<double> ret = simple_returns(r);
    if (ret.empty()) return m;
    m.annual_return_geometric = annual_return_geometric(r, periods_per_year);
    m.annual_return_arithmetic = annual_return_arithmetic(ret, periods_per_year);
    if (ret.size() < 3) return m;
    m.annual_volatility = annual_volatility(ret, periods_per_year);
    m.sharpe = sharpe(*m.annual_return_arithmetic, *m.annual_volatility);
    m.sortino = sortino(*m.annual_return_arithmetic, downside_deviation(ret, periods_per_year));
    return m;
}

// ---------------------------------------------------------------------------
// Report

namespace detail {

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string csv_optional(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

}  // namespace detail

inline json metrics_to_json(const Metrics& m) {
    return {{"method", m.method},
            {"pv_end", m.pv_end},
            {"annual_return_geometric", detail::optional_json(m.annual_return_geometric)},
            {"annual_return_arithmetic", detail::optional_json(m.annual_return_arithmetic)},
            {"annual_volatility", detail::optional_json(m.annual_volatility)},
            {"sharpe", detail::optional_json(m.sharpe)},
            {"sortino", detail::optional_json(m.sortino)},
            {"turnover_total", m.turnover_total},
            {"steps", m.steps},
            {"bankrupt", m.bankrupt}};
}

inline json metrics_report_json(const std::vector<Metrics>& all, const std::string& config_hash) {
    if (all.empty()) throw ValidationError("report needs at least one result");
    json j = {{"config_hash", config_hash}, {"results", json::array()}};
    for (const auto& m : all) j["results"].push_back(metrics_to_json(m));
    return j;
}

inline std::string metrics_csv(const std::vector<Metrics>& all) {
    if (all.empty()) throw ValidationError("report needs at least one result");
    std::ostringstream out;
    out << "method,pv_end,annual_return_geometric,annual_return_arithmetic,annual_volatility,sharpe,sortino,"
           "turnover_total,steps,bankrupt\n";
    for (const auto& m : all)
        out << m.method << ',' << detail::csv_number(m.pv_end) << ',' << detail::csv_optional(m.annual_return_geometric)
            << ',' << detail::csv_optional(m.annual_return_arithmetic) << ','
            << detail::csv_optional(m.annual_volatility) << ',' << detail::csv_optional(m.sharpe) << ','
            << detail::csv_optional(m.sortino) << ',' << detail::csv_number(m.turnover_total) << ',' << m.steps
            << ',' << (m.bankrupt ? "true" : "false") << '\n';
    return out.str();
}

/// Portfolio-value chart: one polyline per method over the step index,
/// linear axes, a legend at the top right.
inline std::string pv_chart_svg(const std::vector<std::string>& methods, const std::vector<std::vector<double>>& pvs) {
    if (methods.empty() || methods.size() != pvs.size()) throw ValidationError("chart needs one series per method");
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
    const double W = 900, H = 500, left = 80, right = 200, top = 30, bottom = 50;
    std::size_t points = 1;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : pvs) {
        points = std::max(points, p.size());
        for (double v : p) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](std::size_t k) { return left + pw * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(points - 1, 1)); };
    auto py = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };
    auto num = [](double v, const char* fmt) {
        char buf[48];
        std::snprintf(buf, sizeof buf, fmt, v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        out << "<text x=\"" << left - 6 << "\" y=\"" << num(py(v) + 4, "%.1f") << "\" text-anchor=\"end\">" << num(v, "%.0f") << "</text>\n";
        const std::size_t step = (points - 1) * static_cast<std::size_t>(k) / 4;
        out << "<text x=\"" << num(px(step), "%.1f") << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << step << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">step</text>\n";
    out << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2 << ")\" text-anchor=\"middle\">portfolio value</text>\n";
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const char* colour = palette[m % (sizeof palette / sizeof *palette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < pvs[m].size(); ++k) out << (k ? " " : "") << num(px(k), "%.2f") << ',' << num(py(pvs[m][k]), "%.2f");
        out << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(m);
        out << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 35 << "\" y2=\"" << ly
            << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\">" << methods[m] << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

/// One run as a container, read back by the report stage.
inline json backtest_to_json(const BacktestResult& r, const std::string& config_hash) {
    json j = make_container("backtest", config_hash);
    j["method"] = r.method;
    j["dates"] = r.dates;
    j["pv"] = r.pv;
    j["rewards"] = r.rewards;
    j["turnover"] = r.turnover;
    j["bankrupt"] = r.bankrupt;
    json w = json::array();
    for (const auto& v : r.weights) w.push_back(vector_to_json(v));
    j["weights"] = std::move(w);
    return j;
}

inline BacktestResult backtest_from_json(const json& j) {
    try {
        BacktestResult r;
        r.method = j.at("method").get<std::string>();
        r.dates = j.at("dates").get<std::vector<std::string>>();
        r.pv = j.at("pv").get<std::vector<double>>();
        r.rewards = j.at("rewards").get<std::vector<double>>();
        r.turnover = j.at("turnover").get<std::vector<double>>();
        r.bankrupt = j.at("bankrupt").get<bool>();
        for (const auto& w : j.at("weights")) r.weights.push_back(vector_from_json(w));
        if (r.pv.empty() || r.pv.size() != r.rewards.size() + 1) throw ValidationError("backtest pv and rewards disagree");
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed backtest result: ") + e.what());
    }
}

}  // namespace lfss

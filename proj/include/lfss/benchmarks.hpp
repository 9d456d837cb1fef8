#pragma once

// Rule-based comparison strategies: equal weight, moving-average mean
// reversion (WMAMR), mean-variance selection and the Kd-Index strategies
// (IMVK). Every allocation is an (n+1)-vector with cash first.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lfss/error.hpp"
#include "lfss/market_data.hpp"

namespace lfss {

// ---------------------------------------------------------------------------
// Simplex projection

/// Euclidean projection onto {w >= 0, sum w = 1} by the sorted-threshold rule.
inline Eigen::VectorXd simplex_project(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw ValidationError("cannot project an empty vector");
    if (!v.allFinite()) throw ValidationError("cannot project a non-finite vector");
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumulative += u[k];
        const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (u[k] - candidate > 0.0) theta = candidate;
    }
    Eigen::VectorXd w = (v.array() - theta).max(0.0).matrix();
    // Remove the rounding residue so the sum is 1 to machine precision.
    const double s = w.sum();
    if (s > 0.0) w /= s;
    return w;
}

// ---------------------------------------------------------------------------
// Kd-Index

/// Raw stochastic value of the last close within the window; 50 when flat.
inline double rsv(const Eigen::VectorXd& closes) {
    if (closes.size() == 0) throw ValidationError("RSV needs a non-empty window");
    const double lo = closes.minCoeff(), hi = closes.maxCoeff();
    if (hi == lo) return 50.0;
    return 100.0 * (closes(closes.size() - 1) - lo) / (hi - lo);
}

struct KdState {
    double K = 50.0;
    double D = 50.0;
    double prev_K = 50.0;
    double prev_D = 50.0;
    int updates = 0;
};

inline KdState kd_update(const KdState& s, double rsv_value) {
    KdState out;
    out.prev_K = s.K;
    out.prev_D = s.D;
    out.K = rsv_value / 3.0 + s.K * 2.0 / 3.0;
    out.D = out.K / 3.0 + s.D * 2.0 / 3.0;
    out.updates = s.updates + 1;
    return out;
}

/// K crossing above D between the last two updates.
inline bool buy_signal(const KdState& s) {
    if (s.updates < 2) throw ValidationError("Kd buy signal needs at least two updates");
    return s.prev_K <= s.prev_D && s.K > s.D;
}

// ---------------------------------------------------------------------------
// Allocations

inline Eigen::VectorXd ew_allocate(Eigen::Index n) {
    if (n < 1) throw ValidationError("equal weight needs at least one asset");
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, 1.0 / static_cast<double>(n));
    w(0) = 0.0;
    return w;
}

/// Ridge-regularised Markowitz direction from a window of per-period returns
/// (rows = periods), scaled to unit absolute sum. All zero when the mean is zero.
inline Eigen::VectorXd mean_variance_weights(const Eigen::MatrixXd& returns) {
    const Eigen::Index m = returns.rows(), n = returns.cols();
    if (n < 1 || m <= n)
        throw ValidationError("mean-variance window needs more periods (" + std::to_string(m) + ") than assets (" +
                              std::to_string(n) + ")");
    const Eigen::VectorXd mu = returns.colwise().mean().transpose();
    const Eigen::MatrixXd centered = returns.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m - 1);
    const double ridge = 1e-6 * cov.trace() / static_cast<double>(n);
    cov.diagonal().array() += ridge;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !(ridge > 0.0))
        throw NumericalError("mean-variance covariance is singular after ridge");
    Eigen::VectorXd w = llt.solve(mu);
    if (!w.allFinite()) throw NumericalError("mean-variance solve produced non-finite weights");
    const double scale = w.cwiseAbs().sum();
    return scale > 0.0 ? Eigen::VectorXd(w / scale) : Eigen::VectorXd(Eigen::VectorXd::Zero(n));
}

enum class ImvkMode { moderate, aggressive };

/// Equal split over the selected assets; all cash when nothing is selected.
inline Eigen::VectorXd imvk_allocate(ImvkMode mode, const std::vector<bool>& signals, const Eigen::VectorXd& mv) {
    const auto n = static_cast<Eigen::Index>(signals.size());
    if (mode == ImvkMode::moderate && mv.size() != n)
        throw ValidationError("IMVK signals and mean-variance weights differ in length");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
    int chosen = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool pick = signals[static_cast<std::size_t>(i)] && (mode == ImvkMode::aggressive || mv(i) > 0.0);
        if (pick) {
            w(i + 1) = 1.0;
            ++chosen;
        }
    }
    if (chosen == 0)
        w(0) = 1.0;
    else
        w /= chosen;
    return w;
}

/// Moving-average reversion step over risky weights. `closes` holds the last
/// window rows (oldest first); the prediction is the window mean over the
/// latest close. Returns the projected risky weights.
inline Eigen::VectorXd wmamr_step(const Eigen::VectorXd& weights, const Eigen::MatrixXd& closes, double epsilon) {
    if (closes.rows() < 2) throw ValidationError("WMAMR window must hold at least 2 rows");
    if (closes.cols() != weights.size()) throw ValidationError("WMAMR weights and closes differ in width");
    const Eigen::VectorXd last = closes.row(closes.rows() - 1).transpose();
    const Eigen::VectorXd x = (closes.colwise().mean().transpose().array() / last.array()).matrix();
    const Eigen::VectorXd dev = x.array() - x.mean();
    const double norm2 = dev.squaredNorm();
    if (norm2 == 0.0) return simplex_project(weights);
    const double tau = std::max(0.0, (epsilon - weights.dot(x)) / norm2);
    return simplex_project(weights + tau * dev);
}

// ---------------------------------------------------------------------------
// Strategy runs

enum class Benchmark { ew, wmamr, imvk_moderate, imvk_aggressive };

inline std::string to_string(Benchmark b) {
    switch (b) {
        case Benchmark::ew: return "EW";
        case Benchmark::wmamr: return "WMAMR";
        case Benchmark::imvk_moderate: return "IMVK-moderate";
        case Benchmark::imvk_aggressive: return "IMVK-aggressive";
    }
    return "EW";
}

inline const std::vector<Benchmark>& all_benchmarks() {
    static const std::vector<Benchmark> all{Benchmark::ew, Benchmark::wmamr, Benchmark::imvk_moderate,
                                            Benchmark::imvk_aggressive};
    return all;
}

struct BenchmarkOptions {
    Eigen::Index rsv_window = 60;
    Eigen::Index mv_window = 60;
    Eigen::Index wmamr_window = 5;
    double wmamr_epsilon = 5.0;
};

inline void validate(const BenchmarkOptions& o) {
    if (o.rsv_window < 1) throw ValidationError("benchmarks.rsv_window must be positive");
    if (o.mv_window < 2) throw ValidationError("benchmarks.mv_window must be at least 2");
    if (o.wmamr_window < 2) throw ValidationError("benchmarks.wmamr_window must be at least 2");
    if (!(o.wmamr_epsilon > 0.0)) throw ValidationError("benchmarks.wmamr_epsilon must be positive");
}

/// Smallest action index a benchmark can act on for this series.
inline Eigen::Index benchmark_first_index(Benchmark b, const BenchmarkOptions& o) {
    switch (b) {
        case Benchmark::ew: return 0;
        case Benchmark::wmamr: return o.wmamr_window - 1;
        // Two Kd updates, plus the return window for the mean-variance filter.
        case Benchmark::imvk_moderate: return std::max(o.rsv_window, o.mv_window);
        case Benchmark::imvk_aggressive: return o.rsv_window;
    }
    return 0;
}

/// Weights chosen at each t in [first, last] from closes up to row t. The
/// Kd recursion starts at the first full RSV window of the series so signals
/// depend on the series, not on `first`.
inline std::vector<Eigen::VectorXd> run_benchmark(Benchmark b, const OhlcSeries& s, Eigen::Index first,
                                                  Eigen::Index last, const BenchmarkOptions& o = {}) {
    validate(o);
    const Eigen::Index T = static_cast<Eigen::Index>(s.length()), n = static_cast<Eigen::Index>(s.asset_count());
    if (first < benchmark_first_index(b, o) || last < first || last >= T)
        throw IndexError(to_string(b) + " cannot act on [" + std::to_string(first) + ", " + std::to_string(last) +
                         "] (first usable index " + std::to_string(benchmark_first_index(b, o)) + ")");
    std::vector<Eigen::VectorXd> out;
    switch (b) {
        case Benchmark::ew:
            out.assign(static_cast<std::size_t>(last - first + 1), ew_allocate(n));
            break;
        case Benchmark::wmamr: {
            Eigen::VectorXd risky = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
            for (Eigen::Index t = first; t <= last; ++t) {
                risky = wmamr_step(risky, s.close.middleRows(t - o.wmamr_window + 1, o.wmamr_window), o.wmamr_epsilon);
                Eigen::VectorXd w(n + 1);
                w << 0.0, risky;
                out.push_back(std::move(w));
            }
            break;
        }
        case Benchmark::imvk_moderate:
        case Benchmark::imvk_aggressive: {
            const ImvkMode mode = b == Benchmark::imvk_moderate ? ImvkMode::moderate : ImvkMode::aggressive;
            const Eigen::MatrixXd r = log_returns(s.close);
            std::vector<KdState> kd(static_cast<std::size_t>(n));
            for (Eigen::Index t = o.rsv_window - 1; t <= last; ++t) {
                std::vector<bool> signal(static_cast<std::size_t>(n));
                for (Eigen::Index i = 0; i < n; ++i) {
                    auto& k = kd[static_cast<std::size_t>(i)];
                    k = kd_update(k, rsv(s.close.col(i).segment(t - o.rsv_window + 1, o.rsv_window)));
                    signal[static_cast<std::size_t>(i)] = k.updates >= 2 && buy_signal(k);
                }
                if (t < first) continue;
                Eigen::VectorXd mv;
                if (mode == ImvkMode::moderate) mv = mean_variance_weights(r.middleRows(t - o.mv_window + 1, o.mv_window));
                out.push_back(imvk_allocate(mode, signal, mv));
            }
            break;
        }
    }
    return out;
}

/// Weight history as CSV: one row per date, cash then each ticker.
inline std::string weights_csv(const OhlcSeries& s, Eigen::Index first, const std::vector<Eigen::VectorXd>& weights) {
    std::ostringstream out;
    out.precision(17);
    out << "date,cash";
    for (const auto& t : s.tickers) out << ',' << t;
    out << '\n';
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out << s.dates[static_cast<std::size_t>(first) + k];
        for (Eigen::Index i = 0; i < weights[k].size(); ++i) out << ',' << weights[k](i);
        out << '\n';
    }
    return out.str();
}

}  // namespace lfss

#pragma once

// Markets with a known best asset, for training-behaviour checks.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "lfss/market_data.hpp"

namespace lfss::oracle {

/// Closes whose per-step growth is base[i] plus uniform noise of half-width
/// `jitter`. With the bases spread wider than 2 * jitter, the asset with the
/// largest base has the strictly largest relative at every step.
inline OhlcSeries rigged_market(const std::vector<double>& base, double jitter, Eigen::Index length,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    const auto n = static_cast<Eigen::Index>(base.size());
    Eigen::MatrixXd close(length, n);
    close.row(0).setConstant(100.0);
    for (Eigen::Index t = 1; t < length; ++t)
        for (Eigen::Index i = 0; i < n; ++i) close(t, i) = close(t - 1, i) * (base[static_cast<std::size_t>(i)] + u(rng));
    SynthOptions opt;
    opt.risk_free_annual = 0.0;
    return series_from_closes(close, opt);
}

}  // namespace lfss::oracle

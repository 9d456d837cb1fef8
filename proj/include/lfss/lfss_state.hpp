#pragma once

// Agent observations: per-channel return covariances, a latent feature block
// from one of the extractors, and the previous portfolio vector.
//
// Time indexing: row t of a return panel is log(p_t / p_{t-1}) and row 0 is
// zero. The state at t sees the m return rows t-m+1..t, so the first valid t
// is m (2m for a cRBM with one history window). The action chosen at t is
// held over the period ending at t+1.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lfss/autoencoder.hpp"
#include "lfss/crbm.hpp"
#include "lfss/error.hpp"
#include "lfss/kalman.hpp"
#include "lfss/market_data.hpp"
#include "lfss/zoomsvd.hpp"

namespace lfss {

enum class ExtractorKind { autoencoder, zoomsvd, crbm, none };

inline std::string to_string(ExtractorKind k) {
    switch (k) {
        case ExtractorKind::autoencoder: return "autoencoder";
        case ExtractorKind::zoomsvd: return "zoomsvd";
        case ExtractorKind::crbm: return "crbm";
        case ExtractorKind::none: return "none";
    }
    return "none";
}

inline ExtractorKind extractor_from_string(const std::string& s) {
    if (s == "autoencoder") return ExtractorKind::autoencoder;
    if (s == "zoomsvd") return ExtractorKind::zoomsvd;
    if (s == "crbm") return ExtractorKind::crbm;
    if (s == "none") return ExtractorKind::none;
    throw ValidationError("unknown extractor '" + s + "' (expected autoencoder, zoomsvd, crbm or none)");
}

inline constexpr int kChannels = 3;  // close, high, low

/// Log-return panels (T x n) for close, high and low; row 0 is zero.
using ReturnPanels = std::array<Eigen::MatrixXd, kChannels>;

inline ReturnPanels channel_returns(const OhlcSeries& s) {
    return {log_returns(s.close), log_returns(s.high), log_returns(s.low)};
}

// ---------------------------------------------------------------------------
// Filtering unit

/// Local-level settings per channel (open, high, low, close) and asset.
struct FilterFit {
    std::array<std::vector<LocalLevelParams>, 4> params;
};

/// Fits every (channel, asset) filter on returns from the first `train_rows`
/// price rows only.
inline FilterFit fit_filter(const OhlcSeries& s, std::size_t train_rows, double kappa) {
    if (train_rows < 11 || train_rows > s.length())
        throw ValidationError("filter fit needs at least 11 training rows inside the series");
    FilterFit fit;
    const std::array<const Eigen::MatrixXd*, 4> panels{&s.open, &s.high, &s.low, &s.close};
    for (std::size_t c = 0; c < 4; ++c) {
        const Eigen::MatrixXd r = log_returns(*panels[c]);
        for (Eigen::Index i = 0; i < r.cols(); ++i) {
            std::vector<double> col(train_rows - 1);
            for (std::size_t t = 1; t < train_rows; ++t) col[t - 1] = r(static_cast<Eigen::Index>(t), i);
            fit.params[c].push_back(fit_local_level(col, kappa));
        }
    }
    return fit;
}

/// Filters the log returns of every price panel and cumulates them back to
/// prices from the first observed row. The result keeps positivity but not
/// necessarily the high/low envelope.
inline OhlcSeries apply_filter(const OhlcSeries& s, const FilterFit& fit) {
    for (const auto& p : fit.params)
        if (p.size() != s.asset_count()) throw ValidationError("filter fit does not match asset count");
    OhlcSeries out = s;
    const std::array<const Eigen::MatrixXd*, 4> in{&s.open, &s.high, &s.low, &s.close};
    const std::array<Eigen::MatrixXd*, 4> dst{&out.open, &out.high, &out.low, &out.close};
    for (std::size_t c = 0; c < 4; ++c) {
        const Eigen::MatrixXd f = filter_panel(log_returns(*in[c]), fit.params[c]);
        *dst[c] = cumulate_prices(in[c]->row(0), f);
    }
    return out;
}

inline json filter_fit_to_json(const FilterFit& fit, const std::string& config_hash) {
    json j = make_container("filter", config_hash);
    const char* names[4] = {"open", "high", "low", "close"};
    for (std::size_t c = 0; c < 4; ++c) {
        json arr = json::array();
        for (const auto& p : fit.params[c]) arr.push_back({{"q", p.q}, {"r", p.r}, {"mu0", p.mu0}, {"p0", p.p0}});
        j["channels"][names[c]] = arr;
    }
    return j;
}

inline FilterFit filter_fit_from_json(const json& j) {
    try {
        FilterFit fit;
        const char* names[4] = {"open", "high", "low", "close"};
        for (std::size_t c = 0; c < 4; ++c)
            for (const auto& p : j.at("channels").at(names[c]))
                fit.params[c].push_back({p.at("q").get<double>(), p.at("r").get<double>(),
                                         p.at("mu0").get<double>(), p.at("p0").get<double>()});
        return fit;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed filter parameters: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Covariance block

/// Sample covariance (denominator m - 1) of the columns of an m x n window.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& window) {
    if (window.rows() < 2) throw ValidationError("covariance needs a window of at least 2 rows");
    const Eigen::MatrixXd centered = window.rowwise() - window.colwise().mean();
    Eigen::MatrixXd c = centered.transpose() * centered / static_cast<double>(window.rows() - 1);
    return 0.5 * (c + c.transpose());
}

/// Covariances of the m return rows ending at t, one matrix per channel
/// (close only when `close_only`).
inline std::vector<Eigen::MatrixXd> covariance_feature(const ReturnPanels& r, Eigen::Index t,
                                                       Eigen::Index m, bool close_only = false) {
    if (m < 2) throw ValidationError("covariance window must be at least 2");
    if (t < m || t >= r[0].rows())
        throw IndexError("covariance window ending at " + std::to_string(t) + " needs t >= " +
                         std::to_string(m) + " inside the series");
    std::vector<Eigen::MatrixXd> out;
    for (int c = 0; c < (close_only ? 1 : kChannels); ++c)
        out.push_back(sample_covariance(r[static_cast<std::size_t>(c)].middleRows(t - m + 1, m)));
    return out;
}

// ---------------------------------------------------------------------------
// State tensor and portfolio-vector memory

struct StateTensor {
    std::vector<Eigen::MatrixXd> cov;     // per channel, n x n
    std::vector<Eigen::MatrixXd> latent;  // per channel, n x d
    Eigen::VectorXd prev_weights;         // n + 1, cash first

    Eigen::Index assets() const { return latent.empty() ? 0 : latent.front().rows(); }
    Eigen::Index latent_dim() const { return latent.empty() ? 0 : latent.front().cols(); }
};

inline bool on_simplex(const Eigen::VectorXd& w, double tol = 1e-10) {
    return w.size() > 0 && w.allFinite() && w.minCoeff() >= -tol && std::abs(w.sum() - 1.0) <= tol;
}

/// Latest action per time index over [first, last]; every slot starts uniform.
class PortfolioVectorMemory {
public:
    PortfolioVectorMemory() = default;
    PortfolioVectorMemory(Eigen::Index first, Eigen::Index last, Eigen::Index assets)
        : first_(first), size_(assets + 1) {
        if (last < first) throw ValidationError("PVM range is empty");
        if (assets < 1) throw ValidationError("PVM needs at least one risky asset");
        slots_.assign(static_cast<std::size_t>(last - first + 1),
                      Eigen::VectorXd::Constant(size_, 1.0 / static_cast<double>(size_)));
    }

    Eigen::Index first() const noexcept { return first_; }
    Eigen::Index last() const noexcept { return first_ + static_cast<Eigen::Index>(slots_.size()) - 1; }
    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(slots_.size()); }

    const Eigen::VectorXd& at(Eigen::Index t) const { return slots_[index(t)]; }

    void set(Eigen::Index t, const Eigen::VectorXd& w) {
        if (w.size() != size_ || !on_simplex(w, 1e-9))
            throw ValidationError("PVM entries must be simplex vectors of length " + std::to_string(size_));
        slots_[index(t)] = w;
    }

private:
    std::size_t index(Eigen::Index t) const {
        if (t < first_ || t > last())
            throw IndexError("PVM index " + std::to_string(t) + " outside [" + std::to_string(first_) +
                             ", " + std::to_string(last()) + "]");
        return static_cast<std::size_t>(t - first_);
    }

    Eigen::Index first_ = 0;
    Eigen::Index size_ = 0;
    std::vector<Eigen::VectorXd> slots_;
};

// ---------------------------------------------------------------------------
// Feature builder

struct StateOptions {
    Eigen::Index window = 60;
    bool close_only_covariance = false;
    Eigen::Index zoom_block = 60;
};

/// Trained extractor for one kind; exactly the member matching `kind` is set.
struct Extractor {
    ExtractorKind kind = ExtractorKind::none;
    std::optional<AeWeights> autoencoder;
    std::optional<CrbmParams> crbm;
};

struct Features {
    std::vector<Eigen::MatrixXd> cov;
    std::vector<Eigen::MatrixXd> latent;
};

class FeatureBuilder {
public:
    FeatureBuilder(const OhlcSeries& series, Extractor extractor, StateOptions options)
        : series_(series), returns_(channel_returns(series)), extractor_(std::move(extractor)),
          options_(options) {
        if (options_.window < 2) throw ValidationError("state window must be at least 2");
        switch (extractor_.kind) {
            case ExtractorKind::autoencoder:
                if (!extractor_.autoencoder) throw OrderingError("autoencoder extractor has not been trained");
                if (extractor_.autoencoder->topology.input_dim != options_.window)
                    throw ValidationError("autoencoder input_dim does not match the state window");
                break;
            case ExtractorKind::crbm:
                if (!extractor_.crbm) throw OrderingError("cRBM extractor has not been trained");
                if (extractor_.crbm->visible() != options_.window)
                    throw ValidationError("cRBM visible size does not match the state window");
                break;
            case ExtractorKind::zoomsvd:
                for (int c = 0; c < kChannels; ++c)
                    stores_.push_back(store_phase(returns_[static_cast<std::size_t>(c)], options_.zoom_block));
                break;
            case ExtractorKind::none: break;
        }
    }

    const OhlcSeries& series() const noexcept { return series_; }
    const ReturnPanels& returns() const noexcept { return returns_; }
    const StateOptions& options() const noexcept { return options_; }
    ExtractorKind kind() const noexcept { return extractor_.kind; }
    Eigen::Index assets() const { return static_cast<Eigen::Index>(series_.asset_count()); }
    Eigen::Index length() const { return static_cast<Eigen::Index>(series_.length()); }

    /// Smallest t with a complete state.
    Eigen::Index first_valid() const {
        Eigen::Index need = options_.window;
        if (extractor_.kind == ExtractorKind::crbm) need *= 1 + extractor_.crbm->history_len;
        return need;
    }

    Eigen::Index latent_dim() const {
        switch (extractor_.kind) {
            case ExtractorKind::autoencoder: return extractor_.autoencoder->topology.latent_dim;
            case ExtractorKind::crbm: return extractor_.crbm->hidden();
            case ExtractorKind::zoomsvd: return assets();
            case ExtractorKind::none: return options_.window;
        }
        return 0;
    }

    int cov_channels() const { return options_.close_only_covariance ? 1 : kChannels; }

    Features features(Eigen::Index t) const {
        if (t < first_valid() || t >= length())
            throw IndexError("insufficient history for a state at t=" + std::to_string(t) +
                             " (first valid index " + std::to_string(first_valid()) + ")");
        const Eigen::Index m = options_.window;
        Features f;
        f.cov = covariance_feature(returns_, t, m, options_.close_only_covariance);
        const Eigen::Index n = assets();
        if (extractor_.kind == ExtractorKind::none) {
            const auto x = ohlc_tensor(series_, static_cast<std::size_t>(t), static_cast<std::size_t>(m));
            f.latent = {x.close, x.high, x.low};
            return f;
        }
        for (int c = 0; c < kChannels; ++c) {
            const Eigen::MatrixXd& r = returns_[static_cast<std::size_t>(c)];
            if (extractor_.kind == ExtractorKind::zoomsvd) {
                f.latent.push_back(stores_[static_cast<std::size_t>(c)].feature(t, m));
                continue;
            }
            Eigen::MatrixXd block(n, latent_dim());
            for (Eigen::Index i = 0; i < n; ++i) {
                const Eigen::VectorXd w = minmax_scale(r.col(i).segment(t - m + 1, m));
                if (extractor_.kind == ExtractorKind::autoencoder) {
                    block.row(i) = encode(*extractor_.autoencoder, w).transpose();
                } else {
                    const CrbmParams& p = *extractor_.crbm;
                    block.row(i) = crbm_feature(p, w, history_windows(r.col(i), t, m, p.history_len)).transpose();
                }
            }
            f.latent.push_back(std::move(block));
        }
        return f;
    }

    StateTensor build_state(Eigen::Index t, const Eigen::VectorXd& prev_weights) const {
        if (prev_weights.size() != assets() + 1 || !on_simplex(prev_weights))
            throw ValidationError("previous weights must be a simplex vector of length n+1");
        Features f = features(t);
        return {std::move(f.cov), std::move(f.latent), prev_weights};
    }

    StateTensor build_state(Eigen::Index t, const PortfolioVectorMemory& pvm) const {
        return build_state(t, pvm.at(t - 1));
    }

    /// Scaled predecessor windows of the m rows ending at t, oldest first.
    static Eigen::VectorXd history_windows(const Eigen::VectorXd& column, Eigen::Index t,
                                           Eigen::Index m, int history_len) {
        Eigen::VectorXd h(history_len * m);
        for (int k = 0; k < history_len; ++k) {
            const Eigen::Index end = t - (history_len - k) * m;
            h.segment(k * m, m) = minmax_scale(column.segment(end - m + 1, m));
        }
        return h;
    }

private:
    OhlcSeries series_;
    ReturnPanels returns_;
    Extractor extractor_;
    StateOptions options_;
    std::vector<BlockStore> stores_;
};

/// Scaled training windows for the autoencoder or cRBM: every asset and
/// channel, window ends from the first usable index through `last_row`
/// stepping by `stride`. `history` is filled when history_len > 0.
struct TrainingWindows {
    Eigen::MatrixXd visible;
    Eigen::MatrixXd history;
};

inline TrainingWindows training_windows(const OhlcSeries& s, Eigen::Index last_row, Eigen::Index m,
                                        Eigen::Index stride, int history_len = 0) {
    if (m < 2 || stride < 1) throw ValidationError("window and stride must be positive");
    const ReturnPanels r = channel_returns(s);
    const Eigen::Index first = m * (1 + history_len);
    last_row = std::min<Eigen::Index>(last_row, static_cast<Eigen::Index>(s.length()) - 1);
    if (last_row < first) throw ValidationError("training range too short for one window");
    std::vector<Eigen::Index> ends;
    for (Eigen::Index t = first; t <= last_row; t += stride) ends.push_back(t);
    const Eigen::Index n = static_cast<Eigen::Index>(s.asset_count());
    const Eigen::Index count = static_cast<Eigen::Index>(ends.size()) * n * kChannels;
    TrainingWindows out{Eigen::MatrixXd(m, count), Eigen::MatrixXd(history_len * m, count)};
    Eigen::Index k = 0;
    for (Eigen::Index t : ends)
        for (int c = 0; c < kChannels; ++c)
            for (Eigen::Index i = 0; i < n; ++i, ++k) {
                const Eigen::VectorXd col = r[static_cast<std::size_t>(c)].col(i);
                out.visible.col(k) = minmax_scale(col.segment(t - m + 1, m));
                if (history_len > 0)
                    out.history.col(k) = FeatureBuilder::history_windows(col, t, m, history_len);
            }
    return out;
}

/// Binary debug dump: "LFST", then per block a (rows, cols) header and
/// column-major doubles, for cov channels, latent channels and prev_weights.
inline void dump_state(std::ostream& out, const StateTensor& s) {
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    auto put_mat = [&](const Eigen::MatrixXd& m) {
        put_u64(static_cast<std::uint64_t>(m.rows()));
        put_u64(static_cast<std::uint64_t>(m.cols()));
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(m.size() * sizeof(double)));
    };
    out.write("LFST", 4);
    put_u64(s.cov.size());
    for (const auto& m : s.cov) put_mat(m);
    put_u64(s.latent.size());
    for (const auto& m : s.latent) put_mat(m);
    put_mat(s.prev_weights);
    if (!out) throw IoError("failed writing state dump");
}

}  // namespace lfss

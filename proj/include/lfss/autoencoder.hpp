#pragma once

// Encoder/decoder pairs that compress a scaled price window to a shorter
// latent code, trained to minimise the mean squared reconstruction norm.
//
// Two shapes are provided. The dense variant is a mirrored stack of fully
// connected layers. The conv variant runs two conv+average-pool stages along
// time (each halves the length) and mirrors them with nearest upsampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lfss/container.hpp"
#include "lfss/error.hpp"
#include "lfss/nn.hpp"

namespace lfss {

enum class AeVariant { dense, conv };

struct AeTopology {
    AeVariant variant = AeVariant::dense;
    int input_dim = 60;
    int latent_dim = 30;
    std::vector<int> hidden{45};       // dense only, encoder side
    std::vector<int> conv_channels{4, 2};  // conv only; one entry per stage
    int kernel = 3;                    // conv only
    nn::Activation activation = nn::Activation::tanh;
    nn::Activation output = nn::Activation::sigmoid;

    static AeTopology dense_default(int input_dim = 60, int latent_dim = 30) {
        AeTopology t;
        t.input_dim = input_dim;
        t.latent_dim = latent_dim;
        t.hidden = {(input_dim + latent_dim) / 2};
        return t;
    }

    /// Two conv+pool stages: latent_dim = last channel count * input_dim / 4.
    static AeTopology conv_default(int input_dim = 60) {
        AeTopology t;
        t.variant = AeVariant::conv;
        t.input_dim = input_dim;
        t.latent_dim = 2 * (input_dim / 4);
        return t;
    }

    /// Single linear layer each way, no bias-free tricks.
    static AeTopology linear(int input_dim, int latent_dim) {
        AeTopology t;
        t.input_dim = input_dim;
        t.latent_dim = latent_dim;
        t.hidden.clear();
        t.activation = nn::Activation::linear;
        t.output = nn::Activation::linear;
        return t;
    }
};

inline std::string to_string(AeVariant v) { return v == AeVariant::dense ? "dense" : "conv"; }

inline AeVariant ae_variant_from_string(const std::string& v) {
    if (v == "dense") return AeVariant::dense;
    if (v == "conv") return AeVariant::conv;
    throw ValidationError("unknown autoencoder variant '" + v + "' (expected dense or conv)");
}

inline void validate(const AeTopology& t) {
    if (t.input_dim < 2) throw ValidationError("autoencoder input_dim must be at least 2");
    if (t.latent_dim < 1) throw ValidationError("autoencoder latent_dim must be positive");
    if (t.latent_dim >= t.input_dim)
        throw ValidationError("autoencoder latent_dim " + std::to_string(t.latent_dim) +
                              " must be below input_dim " + std::to_string(t.input_dim));
    if (t.variant == AeVariant::conv) {
        const int stages = static_cast<int>(t.conv_channels.size());
        if (stages < 1) throw ValidationError("conv autoencoder needs at least one stage");
        const int shrink = 1 << stages;
        if (t.input_dim % shrink != 0)
            throw ValidationError("conv autoencoder input_dim must be divisible by " +
                                  std::to_string(shrink));
        if (t.conv_channels.back() * (t.input_dim / shrink) != t.latent_dim)
            throw ValidationError("conv autoencoder latent_dim must equal last channel count * "
                                  "input_dim / " + std::to_string(shrink));
    } else {
        for (int h : t.hidden)
            if (h < 1) throw ValidationError("dense autoencoder hidden sizes must be positive");
    }
}

struct AeWeights {
    AeTopology topology;
    nn::Sequential encoder;
    nn::Sequential decoder;
    std::uint64_t seed = 0;

    Eigen::Index param_count() const { return encoder.param_count() + decoder.param_count(); }

    Eigen::VectorXd params() const {
        Eigen::VectorXd p(param_count());
        p << encoder.params(), decoder.params();
        return p;
    }

    void set_params(const Eigen::VectorXd& p) {
        if (p.size() != param_count()) throw ValidationError("autoencoder parameter count mismatch");
        encoder.params() = p.head(encoder.param_count());
        decoder.params() = p.tail(decoder.param_count());
    }
};

namespace detail {

inline std::pair<nn::Sequential, nn::Sequential> build_autoencoder(const AeTopology& t) {
    using namespace nn;
    std::vector<LayerSpec> enc, dec;
    if (t.variant == AeVariant::dense) {
        int width = t.input_dim;
        for (int h : t.hidden) {
            enc.emplace_back(Dense{width, h});
            enc.emplace_back(Act{t.activation, h});
            width = h;
        }
        enc.emplace_back(Dense{width, t.latent_dim});
        enc.emplace_back(Act{t.activation, t.latent_dim});

        width = t.latent_dim;
        for (auto it = t.hidden.rbegin(); it != t.hidden.rend(); ++it) {
            dec.emplace_back(Dense{width, *it});
            dec.emplace_back(Act{t.activation, *it});
            width = *it;
        }
        dec.emplace_back(Dense{width, t.input_dim});
        dec.emplace_back(Act{t.output, t.input_dim});
    } else {
        int channels = 1, length = t.input_dim;
        for (int c : t.conv_channels) {
            enc.emplace_back(Conv1d{channels, c, t.kernel, length});
            enc.emplace_back(Act{t.activation, c * length});
            enc.emplace_back(AvgPool1d{c, length, 2});
            channels = c;
            length /= 2;
        }
        for (std::size_t s = t.conv_channels.size(); s-- > 0;) {
            const int out = s == 0 ? 1 : t.conv_channels[s - 1];
            dec.emplace_back(Upsample1d{channels, length, 2});
            length *= 2;
            dec.emplace_back(Conv1d{channels, out, t.kernel, length});
            dec.emplace_back(Act{s == 0 ? t.output : t.activation, out * length});
            channels = out;
        }
    }
    return {Sequential(std::move(enc)), Sequential(std::move(dec))};
}

}  // namespace detail

/// Fresh network for `topology`; weights drawn from `seed`, biases zero.
inline AeWeights init_autoencoder(const AeTopology& topology, std::uint64_t seed) {
    validate(topology);
    auto [enc, dec] = detail::build_autoencoder(topology);
    std::mt19937_64 rng(seed);
    enc.init(rng);
    dec.init(rng);
    return {topology, std::move(enc), std::move(dec), seed};
}

/// Same shapes as init_autoencoder with every parameter set to zero.
inline AeWeights zero_autoencoder(const AeTopology& topology) {
    validate(topology);
    auto [enc, dec] = detail::build_autoencoder(topology);
    return {topology, std::move(enc), std::move(dec), 0};
}

inline Eigen::VectorXd encode(const AeWeights& w, const Eigen::VectorXd& window) {
    return w.encoder.forward(window);
}

inline Eigen::VectorXd decode(const AeWeights& w, const Eigen::VectorXd& code) {
    return w.decoder.forward(code);
}

/// Mean over columns of |x - decode(encode(x))|^2.
inline double reconstruction_loss(const AeWeights& w, const Eigen::MatrixXd& windows) {
    if (windows.cols() == 0) throw ValidationError("reconstruction_loss: empty batch");
    double total = 0.0;
    for (Eigen::Index k = 0; k < windows.cols(); ++k) {
        const Eigen::VectorXd x = windows.col(k);
        total += (decode(w, encode(w, x)) - x).squaredNorm();
    }
    return total / static_cast<double>(windows.cols());
}

/// Loss over the selected columns and its gradient with respect to
/// AeWeights::params().
inline double loss_and_gradient(const AeWeights& w, const Eigen::MatrixXd& windows,
                                const std::vector<Eigen::Index>& columns, Eigen::VectorXd& grad) {
    if (columns.empty()) throw ValidationError("loss_and_gradient: empty batch");
    const Eigen::Index ne = w.encoder.param_count();
    const Eigen::Index nd = w.decoder.param_count();
    grad = Eigen::VectorXd::Zero(ne + nd);
    const double scale = 1.0 / static_cast<double>(columns.size());
    double total = 0.0;
    nn::Trace te, td;
    for (Eigen::Index c : columns) {
        const Eigen::VectorXd x = windows.col(c);
        const Eigen::VectorXd code = w.encoder.forward(x, te);
        const Eigen::VectorXd out = w.decoder.forward(code, td);
        const Eigen::VectorXd diff = out - x;
        total += diff.squaredNorm();
        const Eigen::VectorXd dcode = w.decoder.backward(td, 2.0 * scale * diff, grad.tail(nd));
        w.encoder.backward(te, dcode, grad.head(ne));
    }
    return total * scale;
}

struct AeTrainConfig {
    int epochs = 100;
    double learning_rate = 0.05;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double plateau_tolerance = 1e-6;
    int plateau_patience = 10;  // 0 disables early stopping
};

inline void validate(const AeTrainConfig& c) {
    if (c.epochs < 1) throw ValidationError("epochs must be positive");
    if (c.batch_size < 1) throw ValidationError("batch_size must be positive");
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
        throw ValidationError("learning_rate must be non-negative");
    if (c.plateau_patience < 0) throw ValidationError("plateau_patience must be non-negative");
}

struct AeTrainResult {
    AeWeights weights;
    std::vector<double> loss_history;  // full-data loss after each epoch
};

/// Mini-batch SGD over shuffled columns of `windows`. The initial weights and
/// the shuffling stream both derive from config.seed.
inline AeTrainResult train_autoencoder(const AeTopology& topology, const AeTrainConfig& config,
                                       const Eigen::MatrixXd& windows) {
    validate(topology);
    validate(config);
    if (windows.rows() != topology.input_dim)
        throw ValidationError("training windows have length " + std::to_string(windows.rows()) +
                              ", topology expects " + std::to_string(topology.input_dim));
    if (windows.cols() < config.batch_size)
        throw ValidationError("need at least batch_size (" + std::to_string(config.batch_size) +
                              ") training windows, got " + std::to_string(windows.cols()));
    if (!windows.allFinite()) throw ValidationError("training windows contain non-finite values");

    AeTrainResult result{init_autoencoder(topology, config.seed), {}};
    AeWeights& w = result.weights;
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(windows.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Eigen::VectorXd params = w.params();
    Eigen::VectorXd grad;
    int flat_epochs = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::vector<Eigen::Index> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                  order.begin() + static_cast<std::ptrdiff_t>(stop));
            loss_and_gradient(w, windows, batch, grad);
            params -= config.learning_rate * grad;
            w.set_params(params);
        }
        const double loss = reconstruction_loss(w, windows);
        if (!std::isfinite(loss) || !params.allFinite())
            throw DivergenceError("autoencoder training diverged at epoch " + std::to_string(epoch));
        if (!result.loss_history.empty() &&
            std::abs(result.loss_history.back() - loss) < config.plateau_tolerance)
            ++flat_epochs;
        else
            flat_epochs = 0;
        result.loss_history.push_back(loss);
        if (config.plateau_patience > 0 && flat_epochs >= config.plateau_patience) break;
    }
    return result;
}

struct GradientCheck {
    double max_relative_error = 0.0;
    int checked = 0;
    bool passed = false;
};

/// Central differences (step 1e-5) on up to `max_params` randomly chosen
/// parameters of the single-window loss.
inline GradientCheck gradient_check(const AeWeights& weights, const Eigen::VectorXd& window,
                                    double tolerance, int max_params = 200,
                                    std::uint64_t seed = 0) {
    if (!(tolerance > 0.0)) throw ValidationError("gradient_check tolerance must be positive");
    const Eigen::MatrixXd batch = window;
    Eigen::VectorXd grad;
    loss_and_gradient(weights, batch, {0}, grad);

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(weights.param_count()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    if (static_cast<int>(idx.size()) > max_params) idx.resize(static_cast<std::size_t>(max_params));

    const double h = 1e-5;
    AeWeights probe = weights;
    const Eigen::VectorXd base = weights.params();
    GradientCheck out;
    for (Eigen::Index k : idx) {
        Eigen::VectorXd p = base;
        p(k) = base(k) + h;
        probe.set_params(p);
        const double up = reconstruction_loss(probe, batch);
        p(k) = base(k) - h;
        probe.set_params(p);
        const double down = reconstruction_loss(probe, batch);
        out.max_relative_error =
            std::max(out.max_relative_error, nn::relative_error(grad(k), (up - down) / (2.0 * h)));
        ++out.checked;
    }
    out.passed = out.max_relative_error <= tolerance;
    return out;
}

/// Maps a window linearly onto [0, 1]; a constant window maps to 0.5.
inline Eigen::VectorXd minmax_scale(const Eigen::VectorXd& window) {
    if (window.size() == 0) return window;
    const double lo = window.minCoeff(), hi = window.maxCoeff();
    if (!(hi - lo > 0.0)) return Eigen::VectorXd::Constant(window.size(), 0.5);
    return (window.array() - lo) / (hi - lo);
}

inline json topology_to_json(const AeTopology& t) {
    return {{"variant", to_string(t.variant)},
            {"input_dim", t.input_dim},
            {"latent_dim", t.latent_dim},
            {"hidden", t.hidden},
            {"conv_channels", t.conv_channels},
            {"kernel", t.kernel},
            {"activation", nn::to_string(t.activation)},
            {"output", nn::to_string(t.output)}};
}

inline AeTopology topology_from_json(const json& j) {
    try {
        AeTopology t;
        const std::string v = j.at("variant").get<std::string>();
        t.variant = ae_variant_from_string(v);
        t.input_dim = j.at("input_dim").get<int>();
        t.latent_dim = j.at("latent_dim").get<int>();
        t.hidden = j.at("hidden").get<std::vector<int>>();
        t.conv_channels = j.at("conv_channels").get<std::vector<int>>();
        t.kernel = j.at("kernel").get<int>();
        t.activation = nn::activation_from_string(j.at("activation").get<std::string>());
        t.output = nn::activation_from_string(j.at("output").get<std::string>());
        validate(t);
        return t;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed autoencoder topology: ") + e.what());
    }
}

inline json autoencoder_to_json(const AeWeights& w, const std::string& config_hash) {
    json j = make_container("autoencoder", config_hash);
    j["topology"] = topology_to_json(w.topology);
    j["seed"] = w.seed;
    j["encoder"] = network_to_json(w.encoder);
    j["decoder"] = network_to_json(w.decoder);
    return j;
}

inline AeWeights autoencoder_from_json(const json& j) {
    AeWeights w = zero_autoencoder(topology_from_json(j.at("topology")));
    const nn::Sequential enc = network_from_json(j.at("encoder"));
    const nn::Sequential dec = network_from_json(j.at("decoder"));
    if (enc.param_count() != w.encoder.param_count() || dec.param_count() != w.decoder.param_count())
        throw ValidationError("autoencoder weights do not match their topology");
    w.encoder.set_params(enc.params());
    w.decoder.set_params(dec.params());
    w.seed = j.value("seed", std::uint64_t{0});
    return w;
}

inline std::string loss_history_csv(const std::vector<double>& history) {
    std::string out = "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < history.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, history[e]);
        out += buf;
    }
    return out;
}

}  // namespace lfss

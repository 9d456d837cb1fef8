#pragma once

// Conditional Gaussian-Bernoulli restricted Boltzmann machine.
//
// Energy with Gaussian visible units v (scale sigma) and binary hidden h:
//
//   E(v, h) = sum_i (v_i - a_i)^2 / (2 sigma_i^2) - b'h - h' W (v / sigma^2)
//
// The visible and hidden biases are shifted by the previous window(s):
// a_t = a + A x, b_t = b + B x. Conditionals follow from the energy:
//
//   p(h_j = 1 | v) = logistic(b_t + W (v / sigma^2))_j
//   v | h          ~ N(a_t + W'h, diag(sigma^2))

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lfss/container.hpp"
#include "lfss/error.hpp"

namespace lfss {

struct CrbmParams {
    Eigen::MatrixXd W;      // hidden x visible
    Eigen::VectorXd a;      // visible bias
    Eigen::VectorXd b;      // hidden bias
    Eigen::MatrixXd A;      // visible x (history_len * visible)
    Eigen::MatrixXd B;      // hidden x (history_len * visible)
    Eigen::VectorXd sigma;  // per-visible scale
    int history_len = 1;

    Eigen::Index visible() const noexcept { return W.cols(); }
    Eigen::Index hidden() const noexcept { return W.rows(); }
    Eigen::Index history_size() const noexcept { return history_len * W.cols(); }

    /// Zero-valued parameters with unit sigma.
    static CrbmParams zeros(Eigen::Index visible, Eigen::Index hidden, int history_len) {
        if (visible < 1 || hidden < 1) throw ValidationError("cRBM layer sizes must be positive");
        if (history_len < 0) throw ValidationError("cRBM history_len must be non-negative");
        CrbmParams p;
        p.W = Eigen::MatrixXd::Zero(hidden, visible);
        p.a = Eigen::VectorXd::Zero(visible);
        p.b = Eigen::VectorXd::Zero(hidden);
        p.A = Eigen::MatrixXd::Zero(visible, history_len * visible);
        p.B = Eigen::MatrixXd::Zero(hidden, history_len * visible);
        p.sigma = Eigen::VectorXd::Ones(visible);
        p.history_len = history_len;
        return p;
    }

    bool all_finite() const {
        return W.allFinite() && a.allFinite() && b.allFinite() && A.allFinite() && B.allFinite() &&
               sigma.allFinite();
    }

    bool operator==(const CrbmParams& o) const {
        return history_len == o.history_len && W.rows() == o.W.rows() && W.cols() == o.W.cols() &&
               W == o.W && a == o.a && b == o.b && A == o.A && B == o.B && sigma == o.sigma;
    }
};

inline void validate(const CrbmParams& p) {
    const Eigen::Index v = p.visible(), h = p.hidden(), x = p.history_size();
    if (p.a.size() != v || p.b.size() != h || p.sigma.size() != v || p.A.rows() != v ||
        p.A.cols() != x || p.B.rows() != h || p.B.cols() != x)
        throw ValidationError("cRBM parameter shapes are inconsistent");
    if (!p.all_finite()) throw ValidationError("cRBM parameters must be finite");
    if (!(p.sigma.minCoeff() > 0.0)) throw ValidationError("cRBM sigma must be positive");
}

/// Small Gaussian weights (scale 0.01), zero biases and autoregressive terms.
inline CrbmParams init_crbm(Eigen::Index visible, Eigen::Index hidden, int history_len,
                            std::uint64_t seed) {
    CrbmParams p = CrbmParams::zeros(visible, hidden, history_len);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.01);
    for (Eigen::Index i = 0; i < p.W.size(); ++i) p.W(i) = nd(rng);
    return p;
}

struct DynamicBiases {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
};

inline DynamicBiases dynamic_biases(const CrbmParams& p, const Eigen::VectorXd& history) {
    if (history.size() != p.history_size())
        throw ValidationError("cRBM history has length " + std::to_string(history.size()) +
                              ", expected " + std::to_string(p.history_size()));
    if (p.history_size() == 0) return {p.a, p.b};
    return {p.a + p.A * history, p.b + p.B * history};
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Eigen::VectorXd hidden_means(const CrbmParams& p, const Eigen::VectorXd& v,
                                    const Eigen::VectorXd& b_t) {
    const Eigen::VectorXd scaled = v.cwiseQuotient(p.sigma.cwiseAbs2());
    return (b_t + p.W * scaled).unaryExpr([](double x) { return logistic(x); });
}

inline void check_visible(const CrbmParams& p, const Eigen::VectorXd& v) {
    if (v.size() != p.visible())
        throw ValidationError("cRBM visible vector has length " + std::to_string(v.size()) +
                              ", expected " + std::to_string(p.visible()));
}

}  // namespace detail

inline Eigen::VectorXd hidden_given_visible(const CrbmParams& p, const Eigen::VectorXd& v,
                                            const Eigen::VectorXd& history) {
    detail::check_visible(p, v);
    return detail::hidden_means(p, v, dynamic_biases(p, history).b);
}

struct VisibleDraw {
    Eigen::VectorXd mean;
    Eigen::VectorXd sample;
};

inline VisibleDraw visible_given_hidden(const CrbmParams& p, const Eigen::VectorXd& h,
                                        const Eigen::VectorXd& history, std::mt19937_64& rng) {
    if (h.size() != p.hidden()) throw ValidationError("cRBM hidden vector length mismatch");
    VisibleDraw d;
    d.mean = dynamic_biases(p, history).a + p.W.transpose() * h;
    std::normal_distribution<double> nd;
    d.sample = d.mean;
    for (Eigen::Index i = 0; i < d.sample.size(); ++i) d.sample(i) += p.sigma(i) * nd(rng);
    return d;
}

inline VisibleDraw visible_given_hidden(const CrbmParams& p, const Eigen::VectorXd& h,
                                        const Eigen::VectorXd& history, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return visible_given_hidden(p, h, history, rng);
}

/// Hidden means used as the latent feature.
inline Eigen::VectorXd crbm_feature(const CrbmParams& p, const Eigen::VectorXd& window,
                                    const Eigen::VectorXd& history) {
    return hidden_given_visible(p, window, history);
}

/// Energy of a configuration under the dynamic biases implied by `history`.
inline double crbm_energy(const CrbmParams& p, const Eigen::VectorXd& v, const Eigen::VectorXd& h,
                          const Eigen::VectorXd& history) {
    const auto [a_t, b_t] = dynamic_biases(p, history);
    const Eigen::VectorXd s2 = p.sigma.cwiseAbs2();
    return ((v - a_t).cwiseAbs2().cwiseQuotient(2.0 * s2)).sum() - b_t.dot(h) -
           h.dot(p.W * v.cwiseQuotient(s2));
}

/// Ascent direction on the log-likelihood, one entry per parameter block.
struct CrbmGradient {
    Eigen::MatrixXd W;
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;

    static CrbmGradient zeros_like(const CrbmParams& p) {
        return {Eigen::MatrixXd::Zero(p.W.rows(), p.W.cols()), Eigen::VectorXd::Zero(p.a.size()),
                Eigen::VectorXd::Zero(p.b.size()), Eigen::MatrixXd::Zero(p.A.rows(), p.A.cols()),
                Eigen::MatrixXd::Zero(p.B.rows(), p.B.cols())};
    }
};

struct CdConfig {
    int k = 1;
    double learning_rate = 0.01;
    int epochs = 50;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

inline void validate(const CdConfig& c) {
    if (c.k < 1) throw ValidationError("CD steps k must be at least 1");
    if (c.epochs < 1) throw ValidationError("epochs must be positive");
    if (c.batch_size < 1) throw ValidationError("batch_size must be positive");
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
        throw ValidationError("learning_rate must be non-negative");
}

/// CD-k estimate of the log-likelihood gradient averaged over the selected
/// columns. Positive statistics use hidden probabilities given the data; the
/// negative phase runs k sampled Gibbs alternations.
inline CrbmGradient cd_gradient(const CrbmParams& p, const Eigen::MatrixXd& visible,
                                const Eigen::MatrixXd& history, const std::vector<Eigen::Index>& columns,
                                int k, std::mt19937_64& rng) {
    if (columns.empty()) throw ValidationError("cd_gradient: empty batch");
    if (k < 1) throw ValidationError("CD steps k must be at least 1");
    CrbmGradient g = CrbmGradient::zeros_like(p);
    const Eigen::VectorXd s2 = p.sigma.cwiseAbs2();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> nd;
    const Eigen::VectorXd no_history(0);
    for (Eigen::Index c : columns) {
        const Eigen::VectorXd v0 = visible.col(c);
        const Eigen::VectorXd x = p.history_size() > 0 ? Eigen::VectorXd(history.col(c)) : no_history;
        const auto [a_t, b_t] = dynamic_biases(p, x);
        const Eigen::VectorXd ph0 = detail::hidden_means(p, v0, b_t);

        Eigen::VectorXd h(ph0.size());
        for (Eigen::Index j = 0; j < h.size(); ++j) h(j) = unif(rng) < ph0(j) ? 1.0 : 0.0;
        Eigen::VectorXd vk = v0, phk = ph0;
        for (int step = 0; step < k; ++step) {
            vk = a_t + p.W.transpose() * h;
            for (Eigen::Index i = 0; i < vk.size(); ++i) vk(i) += p.sigma(i) * nd(rng);
            phk = detail::hidden_means(p, vk, b_t);
            if (step + 1 < k)
                for (Eigen::Index j = 0; j < h.size(); ++j) h(j) = unif(rng) < phk(j) ? 1.0 : 0.0;
        }

        const Eigen::VectorXd da = (v0 - vk).cwiseQuotient(s2);
        const Eigen::VectorXd db = ph0 - phk;
        g.W += ph0 * v0.cwiseQuotient(s2).transpose() - phk * vk.cwiseQuotient(s2).transpose();
        g.a += da;
        g.b += db;
        if (p.history_size() > 0) {
            g.A += da * x.transpose();
            g.B += db * x.transpose();
        }
    }
    const double scale = 1.0 / static_cast<double>(columns.size());
    g.W *= scale;
    g.a *= scale;
    g.b *= scale;
    g.A *= scale;
    g.B *= scale;
    return g;
}

/// One gradient-ascent step on W, a, b, A, B from a CD-k estimate.
inline CrbmParams cd_k_update(const CrbmParams& p, const Eigen::MatrixXd& visible,
                              const Eigen::MatrixXd& history, const std::vector<Eigen::Index>& columns,
                              const CdConfig& config, std::mt19937_64& rng) {
    validate(config);
    const CrbmGradient g = cd_gradient(p, visible, history, columns, config.k, rng);
    CrbmParams out = p;
    out.W += config.learning_rate * g.W;
    out.a += config.learning_rate * g.a;
    out.b += config.learning_rate * g.b;
    out.A += config.learning_rate * g.A;
    out.B += config.learning_rate * g.B;
    if (!out.all_finite()) throw DivergenceError("cRBM update produced non-finite parameters");
    return out;
}

/// Mean over columns of |v - (a_t + W' p(h|v))|^2.
inline double crbm_reconstruction_error(const CrbmParams& p, const Eigen::MatrixXd& visible,
                                        const Eigen::MatrixXd& history) {
    if (visible.cols() == 0) throw ValidationError("reconstruction error of an empty batch");
    double total = 0.0;
    for (Eigen::Index c = 0; c < visible.cols(); ++c) {
        const Eigen::VectorXd v = visible.col(c);
        const Eigen::VectorXd x =
            p.history_size() > 0 ? Eigen::VectorXd(history.col(c)) : Eigen::VectorXd(0);
        const auto [a_t, b_t] = dynamic_biases(p, x);
        const Eigen::VectorXd recon = a_t + p.W.transpose() * detail::hidden_means(p, v, b_t);
        total += (v - recon).squaredNorm();
    }
    return total / static_cast<double>(visible.cols());
}

struct CrbmTrainResult {
    CrbmParams params;
    std::vector<double> error_history;  // reconstruction error after each epoch
};

/// Trains from init_crbm(seed). Columns of `visible` are scaled windows and
/// the matching columns of `history` their concatenated predecessors.
inline CrbmTrainResult train_crbm(Eigen::Index hidden, int history_len, const CdConfig& config,
                                  const Eigen::MatrixXd& visible, const Eigen::MatrixXd& history) {
    validate(config);
    if (visible.cols() < config.batch_size)
        throw ValidationError("need at least batch_size (" + std::to_string(config.batch_size) +
                              ") cRBM training windows, got " + std::to_string(visible.cols()));
    if (history_len > 0 && (history.cols() != visible.cols() || history.rows() != history_len * visible.rows()))
        throw ValidationError("cRBM history matrix shape does not match the windows");
    if (!visible.allFinite() || (history_len > 0 && !history.allFinite()))
        throw ValidationError("cRBM training data contains non-finite values");

    CrbmTrainResult r{init_crbm(visible.rows(), hidden, history_len, config.seed), {}};
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(visible.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(config.batch_size));
            const std::vector<Eigen::Index> batch(order.begin() + static_cast<std::ptrdiff_t>(s),
                                                  order.begin() + static_cast<std::ptrdiff_t>(e));
            try {
                r.params = cd_k_update(r.params, visible, history, batch, config, rng);
            } catch (const DivergenceError&) {
                throw DivergenceError("cRBM training diverged at epoch " + std::to_string(epoch));
            }
        }
        const double err = crbm_reconstruction_error(r.params, visible, history);
        if (!std::isfinite(err))
            throw DivergenceError("cRBM training diverged at epoch " + std::to_string(epoch));
        r.error_history.push_back(err);
    }
    return r;
}

inline json crbm_to_json(const CrbmParams& p, const std::string& config_hash) {
    json j = make_container("crbm", config_hash);
    j["visible"] = p.visible();
    j["hidden"] = p.hidden();
    j["history_len"] = p.history_len;
    j["W"] = matrix_to_json(p.W);
    j["a"] = vector_to_json(p.a);
    j["b"] = vector_to_json(p.b);
    j["A"] = matrix_to_json(p.A);
    j["B"] = matrix_to_json(p.B);
    j["sigma"] = vector_to_json(p.sigma);
    return j;
}

inline CrbmParams crbm_from_json(const json& j) {
    try {
        const auto v = j.at("visible").get<Eigen::Index>();
        const auto h = j.at("hidden").get<Eigen::Index>();
        CrbmParams p = CrbmParams::zeros(v, h, j.at("history_len").get<int>());
        p.W = matrix_from_json(j.at("W"), v);
        p.a = vector_from_json(j.at("a"));
        p.b = vector_from_json(j.at("b"));
        p.A = matrix_from_json(j.at("A"), p.history_size());
        p.B = matrix_from_json(j.at("B"), p.history_size());
        if (p.A.rows() == 0) p.A = Eigen::MatrixXd::Zero(v, p.history_size());
        if (p.B.rows() == 0) p.B = Eigen::MatrixXd::Zero(h, p.history_size());
        p.sigma = vector_from_json(j.at("sigma"));
        validate(p);
        return p;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed cRBM parameters: ") + e.what());
    }
}

}  // namespace lfss

#pragma once

// Minimal feed-forward networks with hand-written backprop.
//
// A Sequential owns a flat parameter vector; layers are plain descriptors that
// index into it. Forward passes are const, so a trained network can be shared
// across threads; per-call activations live in a caller-owned Trace.
//
// Tensors are flattened channel-major: element (c, t) of a C x L signal is at
// c * L + t.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "lfss/error.hpp"

namespace lfss::nn {

enum class Activation { linear, tanh, relu, sigmoid };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "linear";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    throw ValidationError("unknown activation '" + s + "'");
}

struct Dense {
    int in = 0;
    int out = 0;
};

/// Stride-1 convolution along time with zero "same" padding; odd kernel.
struct Conv1d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int length = 0;
};

struct AvgPool1d {
    int channels = 0;
    int length = 0;  // input length, divisible by factor
    int factor = 2;
};

/// Nearest-neighbour upsampling.
struct Upsample1d {
    int channels = 0;
    int length = 0;  // input length
    int factor = 2;
};

struct Act {
    Activation kind = Activation::linear;
    int size = 0;
};

using LayerSpec = std::variant<Dense, Conv1d, AvgPool1d, Upsample1d, Act>;

inline int input_size(const LayerSpec& l) {
    return std::visit(
        [](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Dense>) return s.in;
            if constexpr (std::is_same_v<T, Conv1d>) return s.in_channels * s.length;
            if constexpr (std::is_same_v<T, AvgPool1d>) return s.channels * s.length;
            if constexpr (std::is_same_v<T, Upsample1d>) return s.channels * s.length;
            if constexpr (std::is_same_v<T, Act>) return s.size;
        },
        l);
}

inline int output_size(const LayerSpec& l) {
    return std::visit(
        [](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Dense>) return s.out;
            if constexpr (std::is_same_v<T, Conv1d>) return s.out_channels * s.length;
            if constexpr (std::is_same_v<T, AvgPool1d>) return s.channels * (s.length / s.factor);
            if constexpr (std::is_same_v<T, Upsample1d>) return s.channels * s.length * s.factor;
            if constexpr (std::is_same_v<T, Act>) return s.size;
        },
        l);
}

inline Eigen::Index param_count(const LayerSpec& l) {
    if (const auto* d = std::get_if<Dense>(&l))
        return static_cast<Eigen::Index>(d->in) * d->out + d->out;
    if (const auto* c = std::get_if<Conv1d>(&l))
        return static_cast<Eigen::Index>(c->out_channels) * c->in_channels * c->kernel +
               c->out_channels;
    return 0;
}

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::linear: return x;
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

inline double activate_derivative(Activation a, double x) {
    switch (a) {
        case Activation::linear: return 1.0;
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

/// Inputs seen by each layer during one forward pass.
struct Trace {
    std::vector<Eigen::VectorXd> inputs;
};

class Sequential {
public:
    Sequential() = default;

    explicit Sequential(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw ValidationError("network needs at least one layer");
        Eigen::Index offset = 0;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            validate_layer(layers_[i]);
            if (i > 0 && nn::input_size(layers_[i]) != nn::output_size(layers_[i - 1]))
                throw ValidationError("layer " + std::to_string(i) + " expects input " +
                                      std::to_string(nn::input_size(layers_[i])) +
                                      " but receives " +
                                      std::to_string(nn::output_size(layers_[i - 1])));
            offsets_.push_back(offset);
            offset += nn::param_count(layers_[i]);
        }
        params_ = Eigen::VectorXd::Zero(offset);
    }

    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    int input_size() const { return layers_.empty() ? 0 : nn::input_size(layers_.front()); }
    int output_size() const { return layers_.empty() ? 0 : nn::output_size(layers_.back()); }
    Eigen::Index param_count() const noexcept { return params_.size(); }
    const Eigen::VectorXd& params() const noexcept { return params_; }
    Eigen::VectorXd& params() noexcept { return params_; }

    void set_params(const Eigen::VectorXd& p) {
        if (p.size() != params_.size()) throw ValidationError("parameter count mismatch");
        params_ = p;
    }

    /// Glorot-uniform weights, zero biases.
    void init(std::mt19937_64& rng) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const Eigen::Index off = offsets_[i];
            if (const auto* d = std::get_if<Dense>(&layers_[i])) {
                const double lim = std::sqrt(6.0 / (d->in + d->out));
                std::uniform_real_distribution<double> u(-lim, lim);
                const Eigen::Index nw = static_cast<Eigen::Index>(d->in) * d->out;
                for (Eigen::Index k = 0; k < nw; ++k) params_(off + k) = u(rng);
                params_.segment(off + nw, d->out).setZero();
            } else if (const auto* c = std::get_if<Conv1d>(&layers_[i])) {
                const double fan = (c->in_channels + c->out_channels) * c->kernel;
                const double lim = std::sqrt(6.0 / fan);
                std::uniform_real_distribution<double> u(-lim, lim);
                const Eigen::Index nw =
                    static_cast<Eigen::Index>(c->out_channels) * c->in_channels * c->kernel;
                for (Eigen::Index k = 0; k < nw; ++k) params_(off + k) = u(rng);
                params_.segment(off + nw, c->out_channels).setZero();
            }
        }
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
        check_input(x);
        Eigen::VectorXd h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) h = forward_layer(i, h);
        return h;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x, Trace& trace) const {
        check_input(x);
        trace.inputs.resize(layers_.size());
        Eigen::VectorXd h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            trace.inputs[i] = h;
            h = forward_layer(i, h);
        }
        return h;
    }

    /// Adds dL/dparams into `grad` and returns dL/dinput.
    Eigen::VectorXd backward(const Trace& trace, const Eigen::VectorXd& grad_out,
                             Eigen::Ref<Eigen::VectorXd> grad) const {
        if (grad.size() != params_.size()) throw ValidationError("gradient buffer size mismatch");
        Eigen::VectorXd g = grad_out;
        for (std::size_t i = layers_.size(); i-- > 0;) g = backward_layer(i, trace.inputs[i], g, grad);
        return g;
    }

private:
    static void validate_layer(const LayerSpec& l) {
        if (const auto* c = std::get_if<Conv1d>(&l)) {
            if (c->kernel < 1 || c->kernel % 2 == 0)
                throw ValidationError("conv kernel width must be odd");
            if (c->in_channels < 1 || c->out_channels < 1 || c->length < 1)
                throw ValidationError("conv dimensions must be positive");
        }
        if (const auto* p = std::get_if<AvgPool1d>(&l))
            if (p->factor < 1 || p->length % p->factor != 0)
                throw ValidationError("pool length must be divisible by the pool factor");
        if (const auto* d = std::get_if<Dense>(&l))
            if (d->in < 1 || d->out < 1) throw ValidationError("dense dimensions must be positive");
    }

    void check_input(const Eigen::VectorXd& x) const {
        if (x.size() != input_size())
            throw ValidationError("network input has size " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(input_size()));
    }

    Eigen::VectorXd forward_layer(std::size_t i, const Eigen::VectorXd& x) const {
        const Eigen::Index off = offsets_[i];
        const LayerSpec& l = layers_[i];
        if (const auto* d = std::get_if<Dense>(&l)) {
            const Eigen::Map<const Eigen::MatrixXd> w(params_.data() + off, d->out, d->in);
            const auto b = params_.segment(off + static_cast<Eigen::Index>(d->in) * d->out, d->out);
            return w * x + b;
        }
        if (const auto* c = std::get_if<Conv1d>(&l)) {
            const int L = c->length, K = c->kernel, pad = K / 2;
            const double* w = params_.data() + off;
            const double* b = w + static_cast<Eigen::Index>(c->out_channels) * c->in_channels * K;
            Eigen::VectorXd y(static_cast<Eigen::Index>(c->out_channels) * L);
            for (int o = 0; o < c->out_channels; ++o)
                for (int t = 0; t < L; ++t) {
                    double acc = b[o];
                    for (int ci = 0; ci < c->in_channels; ++ci) {
                        const double* wk = w + (o * c->in_channels + ci) * K;
                        for (int k = 0; k < K; ++k) {
                            const int s = t + k - pad;
                            if (s >= 0 && s < L) acc += wk[k] * x(ci * L + s);
                        }
                    }
                    y(o * L + t) = acc;
                }
            return y;
        }
        if (const auto* p = std::get_if<AvgPool1d>(&l)) {
            const int Lo = p->length / p->factor;
            Eigen::VectorXd y(static_cast<Eigen::Index>(p->channels) * Lo);
            for (int ch = 0; ch < p->channels; ++ch)
                for (int t = 0; t < Lo; ++t) {
                    double acc = 0.0;
                    for (int j = 0; j < p->factor; ++j) acc += x(ch * p->length + t * p->factor + j);
                    y(ch * Lo + t) = acc / p->factor;
                }
            return y;
        }
        if (const auto* u = std::get_if<Upsample1d>(&l)) {
            const int Lo = u->length * u->factor;
            Eigen::VectorXd y(static_cast<Eigen::Index>(u->channels) * Lo);
            for (int ch = 0; ch < u->channels; ++ch)
                for (int t = 0; t < Lo; ++t) y(ch * Lo + t) = x(ch * u->length + t / u->factor);
            return y;
        }
        const auto& a = std::get<Act>(l);
        return x.unaryExpr([&](double v) { return activate(a.kind, v); });
    }

    Eigen::VectorXd backward_layer(std::size_t i, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& g, Eigen::Ref<Eigen::VectorXd> grad) const {
        const Eigen::Index off = offsets_[i];
        const LayerSpec& l = layers_[i];
        if (const auto* d = std::get_if<Dense>(&l)) {
            const Eigen::Map<const Eigen::MatrixXd> w(params_.data() + off, d->out, d->in);
            Eigen::Map<Eigen::MatrixXd> gw(grad.data() + off, d->out, d->in);
            gw.noalias() += g * x.transpose();
            grad.segment(off + static_cast<Eigen::Index>(d->in) * d->out, d->out) += g;
            return w.transpose() * g;
        }
        if (const auto* c = std::get_if<Conv1d>(&l)) {
            const int L = c->length, K = c->kernel, pad = K / 2;
            const double* w = params_.data() + off;
            double* gw = grad.data() + off;
            double* gb = gw + static_cast<Eigen::Index>(c->out_channels) * c->in_channels * K;
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c->in_channels) * L);
            for (int o = 0; o < c->out_channels; ++o)
                for (int t = 0; t < L; ++t) {
                    const double go = g(o * L + t);
                    gb[o] += go;
                    for (int ci = 0; ci < c->in_channels; ++ci) {
                        const int base = (o * c->in_channels + ci) * K;
                        for (int k = 0; k < K; ++k) {
                            const int s = t + k - pad;
                            if (s < 0 || s >= L) continue;
                            gw[base + k] += go * x(ci * L + s);
                            dx(ci * L + s) += go * w[base + k];
                        }
                    }
                }
            return dx;
        }
        if (const auto* p = std::get_if<AvgPool1d>(&l)) {
            const int Lo = p->length / p->factor;
            Eigen::VectorXd dx(static_cast<Eigen::Index>(p->channels) * p->length);
            for (int ch = 0; ch < p->channels; ++ch)
                for (int t = 0; t < p->length; ++t)
                    dx(ch * p->length + t) = g(ch * Lo + t / p->factor) / p->factor;
            return dx;
        }
        if (const auto* u = std::get_if<Upsample1d>(&l)) {
            const int Lo = u->length * u->factor;
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u->channels) * u->length);
            for (int ch = 0; ch < u->channels; ++ch)
                for (int t = 0; t < Lo; ++t) dx(ch * u->length + t / u->factor) += g(ch * Lo + t);
            return dx;
        }
        const auto& a = std::get<Act>(l);
        Eigen::VectorXd dx(g.size());
        for (Eigen::Index k = 0; k < g.size(); ++k) dx(k) = g(k) * activate_derivative(a.kind, x(k));
        return dx;
    }

    std::vector<LayerSpec> layers_;
    std::vector<Eigen::Index> offsets_;
    Eigen::VectorXd params_;
};

/// Adaptive-moment step. `step` returns the increment for a descent update
/// (callers doing ascent negate the gradient).
struct Adam {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long steps = 0;

    Eigen::VectorXd step(const Eigen::VectorXd& grad) {
        if (m.size() != grad.size()) {
            m = Eigen::VectorXd::Zero(grad.size());
            v = Eigen::VectorXd::Zero(grad.size());
            steps = 0;
        }
        ++steps;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
        return -learning_rate * ((m / c1).array() / ((v / c2).array().sqrt() + epsilon)).matrix();
    }
};

/// Relative error used by the finite-difference checks: |a - n| / max(|a|, |n|, 1e-6).
inline double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

}  // namespace lfss::nn

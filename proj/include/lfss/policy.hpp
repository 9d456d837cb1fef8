#pragma once

// Trading policy. Each of the n+1 streams (cash first) runs the same small
// evaluator over its own slice of the state: a convolution stack over the
// latent rows, a dense layer over its covariance row, a merge layer, and a
// scalar head that also sees the stream's previous weight. A softmax over the
// n+1 scores gives the portfolio vector.
//
// Training is direct gradient ascent on the mean discounted log reward of a
// batch of consecutive periods, with the previous weights read from the
// portfolio-vector memory and treated as constants.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lfss/container.hpp"
#include "lfss/error.hpp"
#include "lfss/lfss_state.hpp"
#include "lfss/market_data.hpp"
#include "lfss/nn.hpp"

namespace lfss {

struct PolicyTopology {
    int assets = 0;
    int latent_channels = kChannels;
    int latent_dim = 0;
    int cov_channels = kChannels;
    int conv_channels = 8;
    int kernel = 3;
    int cov_hidden = 32;
    int merge_hidden = 64;
    /// Multiplies covariance inputs; per-period variances are tiny otherwise.
    double cov_scale = 252.0;
    /// Constant latent input of the cash stream (1 matches price windows
    /// normalised by their last close, 0 suits learned features).
    double cash_latent_fill = 0.0;

    bool operator==(const PolicyTopology&) const = default;
};

inline void validate(const PolicyTopology& t) {
    if (t.assets < 1) throw ValidationError("policy needs at least one risky asset");
    if (t.latent_channels < 1 || t.latent_dim < 1) throw ValidationError("policy latent shape must be positive");
    if (t.cov_channels < 1) throw ValidationError("policy needs at least one covariance channel");
    if (t.conv_channels < 1 || t.cov_hidden < 1 || t.merge_hidden < 1)
        throw ValidationError("policy layer widths must be positive");
    if (t.kernel < 1 || t.kernel % 2 == 0) throw ValidationError("policy kernel must be odd and positive");
    if (!(t.cov_scale > 0.0) || !std::isfinite(t.cash_latent_fill))
        throw ValidationError("policy cov_scale must be positive");
}

/// Topology sized for the states a feature builder produces.
inline PolicyTopology topology_for(const FeatureBuilder& fb) {
    PolicyTopology t;
    t.assets = static_cast<int>(fb.assets());
    t.latent_dim = static_cast<int>(fb.latent_dim());
    t.cov_channels = fb.cov_channels();
    t.cash_latent_fill = fb.kind() == ExtractorKind::none ? 1.0 : 0.0;
    return t;
}

class PolicyNetwork {
public:
    PolicyNetwork() = default;

    explicit PolicyNetwork(PolicyTopology topology) : topology_(topology) {
        validate(topology_);
        const auto& t = topology_;
        latent_ = nn::Sequential({nn::Conv1d{t.latent_channels, t.conv_channels, t.kernel, t.latent_dim},
                                  nn::Act{nn::Activation::tanh, t.conv_channels * t.latent_dim},
                                  nn::Conv1d{t.conv_channels, 1, t.kernel, t.latent_dim},
                                  nn::Act{nn::Activation::tanh, t.latent_dim}});
        cov_ = nn::Sequential({nn::Dense{t.cov_channels * t.assets, t.cov_hidden},
                               nn::Act{nn::Activation::tanh, t.cov_hidden}});
        merge_ = nn::Sequential({nn::Dense{t.latent_dim + t.cov_hidden, t.merge_hidden},
                                 nn::Act{nn::Activation::tanh, t.merge_hidden}});
        head_ = nn::Sequential({nn::Dense{t.merge_hidden + 1, 1}});
    }

    const PolicyTopology& topology() const noexcept { return topology_; }
    const nn::Sequential& latent_net() const noexcept { return latent_; }
    const nn::Sequential& cov_net() const noexcept { return cov_; }
    const nn::Sequential& merge_net() const noexcept { return merge_; }
    const nn::Sequential& head_net() const noexcept { return head_; }

    Eigen::Index param_count() const {
        return latent_.param_count() + cov_.param_count() + merge_.param_count() + head_.param_count();
    }

    /// Flat parameters in the order latent, covariance, merge, head.
    Eigen::VectorXd params() const {
        Eigen::VectorXd p(param_count());
        Eigen::Index o = 0;
        for (const auto* net : parts()) {
            p.segment(o, net->param_count()) = net->params();
            o += net->param_count();
        }
        return p;
    }

    void set_params(const Eigen::VectorXd& p) {
        if (p.size() != param_count()) throw ValidationError("policy parameter count mismatch");
        Eigen::Index o = 0;
        for (auto* net : parts()) {
            net->set_params(p.segment(o, net->param_count()));
            o += net->param_count();
        }
    }

    void init(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        for (auto* net : parts()) net->init(rng);
    }

    bool operator==(const PolicyNetwork& o) const {
        return topology_ == o.topology_ && params() == o.params();
    }

private:
    std::array<const nn::Sequential*, 4> parts() const { return {&latent_, &cov_, &merge_, &head_}; }
    std::array<nn::Sequential*, 4> parts() { return {&latent_, &cov_, &merge_, &head_}; }

    PolicyTopology topology_;
    nn::Sequential latent_, cov_, merge_, head_;
};

inline PolicyNetwork init_policy(const PolicyTopology& topology, std::uint64_t seed) {
    PolicyNetwork net(topology);
    net.init(seed);
    return net;
}

namespace detail {

inline void check_state(const PolicyTopology& t, const StateTensor& s) {
    const auto n = static_cast<Eigen::Index>(t.assets);
    if (static_cast<int>(s.latent.size()) != t.latent_channels ||
        static_cast<int>(s.cov.size()) != t.cov_channels || s.prev_weights.size() != n + 1)
        throw ValidationError("state does not match the policy topology");
    for (const auto& l : s.latent)
        if (l.rows() != n || l.cols() != t.latent_dim)
            throw ValidationError("latent block shape does not match the policy topology");
    for (const auto& c : s.cov)
        if (c.rows() != n || c.cols() != n) throw ValidationError("covariance block shape mismatch");
}

/// Latent rows of stream i (0 = cash), channel-major as the convolution expects.
inline Eigen::VectorXd latent_input(const PolicyTopology& t, const StateTensor& s, Eigen::Index i) {
    const Eigen::Index d = t.latent_dim;
    Eigen::VectorXd x(t.latent_channels * d);
    for (int c = 0; c < t.latent_channels; ++c) {
        if (i == 0)
            x.segment(c * d, d).setConstant(t.cash_latent_fill);
        else
            x.segment(c * d, d) = s.latent[static_cast<std::size_t>(c)].row(i - 1).transpose();
    }
    return x;
}

/// Covariance row of stream i: own variance, then the other entries sorted
/// descending so the stream does not depend on the order of other assets.
inline Eigen::VectorXd cov_input(const PolicyTopology& t, const StateTensor& s, Eigen::Index i) {
    const Eigen::Index n = t.assets;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(t.cov_channels * n);
    if (i == 0) return x;
    const Eigen::Index a = i - 1;
    for (int c = 0; c < t.cov_channels; ++c) {
        const Eigen::MatrixXd& m = s.cov[static_cast<std::size_t>(c)];
        std::vector<double> others;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != a) others.push_back(m(a, j));
        std::sort(others.begin(), others.end(), std::greater<>());
        x(c * n) = m(a, a);
        for (std::size_t k = 0; k < others.size(); ++k) x(c * n + 1 + static_cast<Eigen::Index>(k)) = others[k];
    }
    return x * t.cov_scale;
}

struct StreamTrace {
    nn::Trace latent, cov, merge, head;
};

inline Eigen::VectorXd softmax(const Eigen::VectorXd& s) {
    const Eigen::VectorXd e = (s.array() - s.maxCoeff()).exp().matrix();
    return e / e.sum();
}

}  // namespace detail

/// Raw stream scores; fills `traces` for a later backward pass when given.
inline Eigen::VectorXd policy_scores(const PolicyNetwork& net, const StateTensor& state,
                                     std::vector<detail::StreamTrace>* traces = nullptr) {
    const PolicyTopology& t = net.topology();
    detail::check_state(t, state);
    const Eigen::Index streams = t.assets + 1;
    if (traces) traces->assign(static_cast<std::size_t>(streams), {});
    Eigen::VectorXd scores(streams);
    for (Eigen::Index i = 0; i < streams; ++i) {
        const Eigen::VectorXd xl = detail::latent_input(t, state, i), xc = detail::cov_input(t, state, i);
        Eigen::VectorXd merged_in(t.latent_dim + t.cov_hidden), head_in(t.merge_hidden + 1);
        if (traces) {
            auto& tr = (*traces)[static_cast<std::size_t>(i)];
            merged_in << net.latent_net().forward(xl, tr.latent), net.cov_net().forward(xc, tr.cov);
            head_in << net.merge_net().forward(merged_in, tr.merge), state.prev_weights(i);
            scores(i) = net.head_net().forward(head_in, tr.head)(0);
        } else {
            merged_in << net.latent_net().forward(xl), net.cov_net().forward(xc);
            head_in << net.merge_net().forward(merged_in), state.prev_weights(i);
            scores(i) = net.head_net().forward(head_in)(0);
        }
    }
    return scores;
}

/// Deterministic action: a point on the (n+1)-simplex, cash first.
inline Eigen::VectorXd act(const PolicyNetwork& net, const StateTensor& state) {
    return detail::softmax(policy_scores(net, state));
}

/// Adds d(objective)/d(params) into `grad` given d(objective)/d(scores).
inline void policy_backward(const PolicyNetwork& net, const std::vector<detail::StreamTrace>& traces,
                            const Eigen::VectorXd& dscores, Eigen::Ref<Eigen::VectorXd> grad) {
    const PolicyTopology& t = net.topology();
    const Eigen::Index nl = net.latent_net().param_count(), nc = net.cov_net().param_count(),
                       nm = net.merge_net().param_count(), nh = net.head_net().param_count();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& tr = traces[i];
        const Eigen::VectorXd dh = net.head_net().backward(tr.head, Eigen::VectorXd::Constant(1, dscores(static_cast<Eigen::Index>(i))),
                                                           grad.segment(nl + nc + nm, nh));
        const Eigen::VectorXd dm = net.merge_net().backward(tr.merge, dh.head(t.merge_hidden), grad.segment(nl + nc, nm));
        net.latent_net().backward(tr.latent, dm.head(t.latent_dim), grad.segment(0, nl));
        net.cov_net().backward(tr.cov, dm.tail(t.cov_hidden), grad.segment(nl, nc));
    }
}

// ---------------------------------------------------------------------------
// Reward

inline double reward_argument(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                              double cost) {
    if (a.size() != y.size() || a.size() != w.size()) throw ValidationError("reward vectors differ in length");
    return a.dot(y) - cost * (a - w).cwiseAbs().sum();
}

/// Log growth of one period net of proportional costs on turnover, which
/// counts every leg including cash.
inline double reward(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     double cost) {
    const double arg = reward_argument(a, y, w, cost);
    if (std::isnan(arg)) throw DivergenceError("reward is not a number");
    if (!(arg > 0.0))
        throw BankruptcyError("portfolio value non-positive after costs (growth factor " + std::to_string(arg) + ")");
    return std::log(arg);
}

/// d reward / d a, using sign(0) = 0 for the turnover term.
inline Eigen::VectorXd reward_gradient(const Eigen::VectorXd& a, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w, double cost) {
    const double arg = reward_argument(a, y, w, cost);
    if (std::isnan(arg)) throw DivergenceError("reward is not a number");
    if (!(arg > 0.0)) throw BankruptcyError("portfolio value non-positive after costs");
    const Eigen::VectorXd sign = (a - w).unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
    return (y - cost * sign) / arg;
}

// ---------------------------------------------------------------------------
// Exploration

/// With probability epsilon, mixes the action half and half with a flat
/// Dirichlet draw; otherwise returns it unchanged.
inline Eigen::VectorXd explore(const Eigen::VectorXd& action, double epsilon, std::mt19937_64& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("exploration epsilon must lie in [0, 1]");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (epsilon == 0.0 || u(rng) >= epsilon) return action;
    std::exponential_distribution<double> e(1.0);
    Eigen::VectorXd d(action.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = e(rng);
    return 0.5 * action + 0.5 * d / d.sum();
}

inline Eigen::VectorXd explore(const Eigen::VectorXd& action, double epsilon, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return explore(action, epsilon, rng);
}

// ---------------------------------------------------------------------------
// Market context

/// Precomputed features and next-period price relatives for every action
/// index in [first, last]. The action at t earns price_relatives(t + 1) of
/// `prices` when given (row-aligned with the builder's series), otherwise of
/// the builder's own series.
class MarketContext {
public:
    MarketContext(const FeatureBuilder& fb, Eigen::Index first, Eigen::Index last, double cost,
                  const OhlcSeries* prices = nullptr)
        : first_(first), cost_(cost) {
        const OhlcSeries& px = prices ? *prices : fb.series();
        if (px.length() != fb.series().length() || px.asset_count() != fb.series().asset_count())
            throw ValidationError("price series does not align with the feature series");
        if (!(cost >= 0.0 && cost < 1.0)) throw ValidationError("transaction cost must lie in [0, 1)");
        if (first < fb.first_valid())
            throw IndexError("first action index " + std::to_string(first) + " precedes the first valid state " +
                             std::to_string(fb.first_valid()));
        if (last < first || last + 1 >= fb.length())
            throw ValidationError("action range [" + std::to_string(first) + ", " + std::to_string(last) +
                                  "] needs a following price row");
        for (Eigen::Index t = first; t <= last; ++t) {
            features_.push_back(fb.features(t));
            relatives_.push_back(price_relatives(px, static_cast<std::size_t>(t + 1)));
        }
        assets_ = fb.assets();
    }

    /// Whole usable range of a feature builder.
    explicit MarketContext(const FeatureBuilder& fb, double cost)
        : MarketContext(fb, fb.first_valid(), fb.length() - 2, cost) {}

    Eigen::Index first() const noexcept { return first_; }
    Eigen::Index last() const noexcept { return first_ + size() - 1; }
    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(features_.size()); }
    Eigen::Index assets() const noexcept { return assets_; }
    double cost() const noexcept { return cost_; }

    StateTensor state(Eigen::Index t, const Eigen::VectorXd& prev_weights) const {
        const Features& f = features_[slot(t)];
        return {f.cov, f.latent, prev_weights};
    }

    const Eigen::VectorXd& next_relatives(Eigen::Index t) const { return relatives_[slot(t)]; }

    /// Memory covering every action index plus the uniform slot before it.
    PortfolioVectorMemory make_pvm() const { return PortfolioVectorMemory(first_ - 1, last(), assets_); }

private:
    std::size_t slot(Eigen::Index t) const {
        if (t < first_ || t > last())
            throw IndexError("action index " + std::to_string(t) + " outside [" + std::to_string(first_) + ", " +
                             std::to_string(last()) + "]");
        return static_cast<std::size_t>(t - first_);
    }

    Eigen::Index first_ = 0;
    Eigen::Index assets_ = 0;
    double cost_ = 0.0;
    std::vector<Features> features_;
    std::vector<Eigen::VectorXd> relatives_;
};

// ---------------------------------------------------------------------------
// Objective and training

enum class Optimizer { sgd, adam };

inline std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

inline Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adam") return Optimizer::adam;
    throw ValidationError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

struct AgentConfig {
    double gamma = 0.99;
    double learning_rate = 0.01;
    int batch_size = 32;
    int episodes = 50;
    double exploration_init = 0.2;
    double exploration_decay = 0.95;
    /// Batches per episode; 0 means one pass worth of the training range.
    int batches_per_episode = 0;
    Optimizer optimizer = Optimizer::sgd;
    std::uint64_t seed = 0;
};

inline void validate(const AgentConfig& c) {
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ValidationError("agent.gamma must lie in (0, 1]");
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate))
        throw ValidationError("agent.learning_rate must be non-negative");
    if (c.batch_size < 1) throw ValidationError("agent.batch_size must be positive");
    if (c.episodes < 0) throw ValidationError("agent.episodes must be non-negative");
    if (!(c.exploration_init >= 0.0 && c.exploration_init <= 1.0))
        throw ValidationError("agent.exploration_init must lie in [0, 1]");
    if (!(c.exploration_decay > 0.0 && c.exploration_decay <= 1.0))
        throw ValidationError("agent.exploration_decay must lie in (0, 1]");
    if (c.batches_per_episode < 0) throw ValidationError("agent.batches_per_episode must be non-negative");
}

struct BatchResult {
    double objective = 0.0;
    Eigen::VectorXd gradient;              // d objective / d params
    std::vector<Eigen::VectorXd> actions;  // network actions for the batch
};

/// J = (1/T) sum_{k=1..T} gamma^k r_k over the T consecutive indices from
/// `start`, with previous weights taken from the memory. The gradient is
/// only formed when `with_gradient` is set.
inline BatchResult evaluate_batch(const PolicyNetwork& net, const MarketContext& ctx,
                                  const PortfolioVectorMemory& pvm, Eigen::Index start, Eigen::Index length,
                                  double gamma, bool with_gradient = true) {
    if (length < 1) throw ValidationError("batch must hold at least one index");
    if (start < ctx.first() || start + length - 1 > ctx.last())
        throw IndexError("batch [" + std::to_string(start) + ", " + std::to_string(start + length - 1) +
                         "] outside the action range");
    BatchResult out;
    if (with_gradient) out.gradient = Eigen::VectorXd::Zero(net.param_count());
    const double inv_t = 1.0 / static_cast<double>(length);
    double discount = 1.0;
    std::vector<detail::StreamTrace> traces;
    for (Eigen::Index k = 0; k < length; ++k) {
        const Eigen::Index t = start + k;
        discount *= gamma;
        const Eigen::VectorXd& w = pvm.at(t - 1);
        const Eigen::VectorXd& y = ctx.next_relatives(t);
        const Eigen::VectorXd scores = policy_scores(net, ctx.state(t, w), with_gradient ? &traces : nullptr);
        const Eigen::VectorXd a = detail::softmax(scores);
        out.objective += inv_t * discount * reward(a, y, w, ctx.cost());
        if (with_gradient) {
            const Eigen::VectorXd ga = inv_t * discount * reward_gradient(a, y, w, ctx.cost());
            const Eigen::VectorXd ds = (a.array() * (ga.array() - a.dot(ga))).matrix();
            policy_backward(net, traces, ds, out.gradient);
        }
        out.actions.push_back(a);
    }
    return out;
}

inline double objective(const PolicyNetwork& net, const MarketContext& ctx, const PortfolioVectorMemory& pvm,
                        Eigen::Index start, Eigen::Index length, double gamma) {
    return evaluate_batch(net, ctx, pvm, start, length, gamma, false).objective;
}

/// Optimiser state carried across steps.
struct AgentOptimizer {
    Optimizer kind = Optimizer::sgd;
    double learning_rate = 0.01;
    nn::Adam adam;

    Eigen::VectorXd ascent_step(const Eigen::VectorXd& grad) {
        if (kind == Optimizer::sgd) return learning_rate * grad;
        adam.learning_rate = learning_rate;
        return adam.step(-grad);
    }
};

/// One ascent step on a batch. The batch's memory slots are overwritten with
/// the (possibly explored) actions of the pre-update network. Returns J.
inline double train_step(PolicyNetwork& net, const MarketContext& ctx, PortfolioVectorMemory& pvm,
                         Eigen::Index start, Eigen::Index length, double gamma, AgentOptimizer& opt,
                         double epsilon, std::mt19937_64& rng) {
    BatchResult b = evaluate_batch(net, ctx, pvm, start, length, gamma, true);
    if (!b.gradient.allFinite()) throw DivergenceError("policy gradient is not finite");
    if (opt.learning_rate > 0.0) {
        const Eigen::VectorXd next = net.params() + opt.ascent_step(b.gradient);
        if (!next.allFinite()) throw DivergenceError("policy parameters became non-finite");
        net.set_params(next);
    }
    for (Eigen::Index k = 0; k < length; ++k)
        pvm.set(start + k, explore(b.actions[static_cast<std::size_t>(k)], epsilon, rng));
    return b.objective;
}

struct TrainResult {
    PolicyNetwork network;
    std::vector<double> j_history;  // mean batch J per episode
    PortfolioVectorMemory pvm;
};

/// Episodes of random consecutive batches over the context's range.
/// Exploration decays geometrically after every episode.
inline TrainResult train_agent(PolicyNetwork net, const MarketContext& ctx, const AgentConfig& cfg) {
    validate(cfg);
    const Eigen::Index length = std::min<Eigen::Index>(cfg.batch_size, ctx.size());
    const Eigen::Index starts = ctx.size() - length + 1;
    const int batches = cfg.batches_per_episode > 0
                            ? cfg.batches_per_episode
                            : static_cast<int>(std::max<Eigen::Index>(1, ctx.size() / length));
    std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);
    std::uniform_int_distribution<Eigen::Index> pick(0, starts - 1);
    AgentOptimizer opt{cfg.optimizer, cfg.learning_rate, {}};
    TrainResult out{std::move(net), {}, ctx.make_pvm()};
    double epsilon = cfg.exploration_init;
    for (int e = 0; e < cfg.episodes; ++e) {
        double total = 0.0;
        for (int b = 0; b < batches; ++b) {
            const Eigen::Index start = ctx.first() + pick(rng);
            try {
                total += train_step(out.network, ctx, out.pvm, start, length, cfg.gamma, opt, epsilon, rng);
            } catch (const DivergenceError& err) {
                throw DivergenceError(std::string(err.what()) + " at episode " + std::to_string(e + 1));
            }
        }
        out.j_history.push_back(total / batches);
        epsilon *= cfg.exploration_decay;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gradient check

struct PolicyGradientCheck {
    double max_relative_error = 0.0;
    int checked = 0;
};

/// Central differences (step 1e-6) on `count` random parameters.
inline PolicyGradientCheck policy_gradient_check(const PolicyNetwork& net, const MarketContext& ctx,
                                                 const PortfolioVectorMemory& pvm, Eigen::Index start,
                                                 Eigen::Index length, double gamma, int count, std::uint64_t seed) {
    const Eigen::VectorXd g = evaluate_batch(net, ctx, pvm, start, length, gamma).gradient;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, net.param_count() - 1);
    PolicyNetwork probe = net;
    const Eigen::VectorXd base = net.params();
    PolicyGradientCheck out;
    const double h = 1e-6;
    for (int k = 0; k < count; ++k) {
        const Eigen::Index i = pick(rng);
        Eigen::VectorXd p = base;
        p(i) += h;
        probe.set_params(p);
        const double up = objective(probe, ctx, pvm, start, length, gamma);
        p(i) -= 2 * h;
        probe.set_params(p);
        const double down = objective(probe, ctx, pvm, start, length, gamma);
        out.max_relative_error = std::max(out.max_relative_error, nn::relative_error(g(i), (up - down) / (2 * h)));
        ++out.checked;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline json policy_topology_to_json(const PolicyTopology& t) {
    return {{"assets", t.assets},          {"latent_channels", t.latent_channels},
            {"latent_dim", t.latent_dim},  {"cov_channels", t.cov_channels},
            {"conv_channels", t.conv_channels}, {"kernel", t.kernel},
            {"cov_hidden", t.cov_hidden},  {"merge_hidden", t.merge_hidden},
            {"cov_scale", t.cov_scale},    {"cash_latent_fill", t.cash_latent_fill}};
}

inline PolicyTopology policy_topology_from_json(const json& j) {
    PolicyTopology t;
    t.assets = j.at("assets").get<int>();
    t.latent_channels = j.at("latent_channels").get<int>();
    t.latent_dim = j.at("latent_dim").get<int>();
    t.cov_channels = j.at("cov_channels").get<int>();
    t.conv_channels = j.at("conv_channels").get<int>();
    t.kernel = j.at("kernel").get<int>();
    t.cov_hidden = j.at("cov_hidden").get<int>();
    t.merge_hidden = j.at("merge_hidden").get<int>();
    t.cov_scale = j.at("cov_scale").get<double>();
    t.cash_latent_fill = j.at("cash_latent_fill").get<double>();
    return t;
}

inline json agent_config_to_json(const AgentConfig& c) {
    return {{"gamma", c.gamma},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"episodes", c.episodes},
            {"exploration_init", c.exploration_init},
            {"exploration_decay", c.exploration_decay},
            {"batches_per_episode", c.batches_per_episode},
            {"optimizer", to_string(c.optimizer)},
            {"seed", c.seed}};
}

/// Policy container; `extractor` names the feature source it was trained on.
inline json policy_to_json(const PolicyNetwork& net, const AgentConfig& cfg, const std::string& extractor,
                           const std::string& config_hash) {
    json j = make_container("policy", config_hash);
    j["extractor"] = extractor;
    j["topology"] = policy_topology_to_json(net.topology());
    j["agent"] = agent_config_to_json(cfg);
    j["params"] = vector_to_json(net.params());
    return j;
}

inline PolicyNetwork policy_from_json(const json& j) {
    try {
        PolicyNetwork net(policy_topology_from_json(j.at("topology")));
        net.set_params(vector_from_json(j.at("params")));
        return net;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed policy container: ") + e.what());
    }
}

inline std::string j_history_csv(const std::vector<double>& history) {
    std::ostringstream out;
    out.precision(17);
    out << "episode,J\n";
    for (std::size_t e = 0; e < history.size(); ++e) out << e + 1 << ',' << history[e] << '\n';
    return out.str();
}

}  // namespace lfss

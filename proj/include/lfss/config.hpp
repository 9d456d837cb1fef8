#pragma once

// Run configuration: a key = value file with dotted keys. Unknown keys,
// duplicates and out-of-range values are errors that name the field.
// Missing keys take the defaults below. `dump` prints every key in a fixed
// order; its hash (without output_dir) identifies a run's artifacts.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lfss/autoencoder.hpp"
#include "lfss/benchmarks.hpp"
#include "lfss/container.hpp"
#include "lfss/error.hpp"
#include "lfss/lfss_state.hpp"
#include "lfss/market_data.hpp"
#include "lfss/policy.hpp"

namespace lfss {

struct SynthSpec {
    int assets = 15;
    int length = 1000;
    double drift = 0.08;   // mean annual drift
    double spread = 0.2;   // drifts spread evenly over drift +- spread/2
    double vol = 0.25;     // annual volatility of every asset
};

struct AeSettings {
    AeVariant variant = AeVariant::dense;
    int latent = 30;  // dense variant only; the conv variant derives it from the window
    int epochs = 50;
    double learning_rate = 0.05;
    int batch_size = 32;
    int stride = 5;
};

struct CrbmSettings {
    int hidden = 30;
    int history = 1;
    int k = 1;
    int epochs = 20;
    double learning_rate = 0.01;
    int batch_size = 32;
    int stride = 5;
};

struct RunConfig {
    std::string data_source = "synth";  // "synth" or a CSV path
    SynthSpec synth;
    double risk_free = kDefaultRiskFreeAnnual;
    int periods_per_year = kDefaultPeriodsPerYear;
    double split = 0.7;
    int window = 60;
    bool close_only_covariance = false;
    bool filter_enabled = true;
    double filter_kappa = 0.1;
    ExtractorKind extractor = ExtractorKind::autoencoder;
    AeSettings ae;
    int zoom_block = 60;
    CrbmSettings crbm;
    AgentConfig agent;
    std::vector<Benchmark> benchmarks = all_benchmarks();
    BenchmarkOptions benchmark_options;
    double cost = 0.002;
    double pv0 = 10000.0;
    std::uint64_t seed = 0;
    std::string output_dir = "runs/default";
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string benchmark_list(const std::vector<Benchmark>& bs) {
    std::string out;
    for (std::size_t i = 0; i < bs.size(); ++i) out += (i ? "," : "") + to_string(bs[i]);
    return out;
}

inline std::vector<Benchmark> parse_benchmarks(const std::string& v) {
    std::vector<Benchmark> out;
    if (v.empty() || v == "none") return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string name = trim(item);
        bool found = false;
        for (Benchmark b : all_benchmarks())
            if (to_string(b) == name) {
                out.push_back(b);
                found = true;
            }
        if (!found)
            throw ValidationError("benchmarks: unknown strategy '" + name +
                                  "' (expected EW, WMAMR, IMVK-moderate, IMVK-aggressive)");
    }
    return out;
}

/// One field: how to print it and how to parse it into the config.
struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ValidationError(key + ": expected a number, got '" + v + "'");
}

inline long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used == v.size()) return i;
    } catch (const std::exception&) {
    }
    throw ValidationError(key + ": expected an integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

#define LFSS_DOUBLE(KEY, MEMBER)                                                              \
    Field{KEY, [](const RunConfig& c) { return fmt_double(c.MEMBER); },                       \
          [](RunConfig& c, const std::string& v) { c.MEMBER = to_double(KEY, v); }}
#define LFSS_INT(KEY, MEMBER)                                                                 \
    Field{KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },                   \
          [](RunConfig& c, const std::string& v) { c.MEMBER = static_cast<int>(to_integer(KEY, v)); }}
#define LFSS_BOOL(KEY, MEMBER)                                                                \
    Field{KEY, [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); },   \
          [](RunConfig& c, const std::string& v) { c.MEMBER = to_bool(KEY, v); }}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> all{
        Field{"data.source", [](const RunConfig& c) { return c.data_source; },
              [](RunConfig& c, const std::string& v) { c.data_source = v; }},
        LFSS_INT("data.synth.assets", synth.assets),
        LFSS_INT("data.synth.length", synth.length),
        LFSS_DOUBLE("data.synth.drift", synth.drift),
        LFSS_DOUBLE("data.synth.spread", synth.spread),
        LFSS_DOUBLE("data.synth.vol", synth.vol),
        LFSS_DOUBLE("data.risk_free", risk_free),
        LFSS_INT("data.periods_per_year", periods_per_year),
        LFSS_DOUBLE("split", split),
        LFSS_INT("window", window),
        LFSS_BOOL("state.close_only_covariance", close_only_covariance),
        LFSS_BOOL("filter.enabled", filter_enabled),
        LFSS_DOUBLE("filter.kappa", filter_kappa),
        Field{"extractor", [](const RunConfig& c) { return to_string(c.extractor); },
              [](RunConfig& c, const std::string& v) { c.extractor = extractor_from_string(v); }},
        Field{"extractor.ae.variant", [](const RunConfig& c) { return to_string(c.ae.variant); },
              [](RunConfig& c, const std::string& v) { c.ae.variant = ae_variant_from_string(v); }},
        LFSS_INT("extractor.ae.latent", ae.latent),
        LFSS_INT("extractor.ae.epochs", ae.epochs),
        LFSS_DOUBLE("extractor.ae.learning_rate", ae.learning_rate),
        LFSS_INT("extractor.ae.batch_size", ae.batch_size),
        LFSS_INT("extractor.ae.stride", ae.stride),
        LFSS_INT("extractor.zoomsvd.block", zoom_block),
        LFSS_INT("extractor.crbm.hidden", crbm.hidden),
        LFSS_INT("extractor.crbm.history", crbm.history),
        LFSS_INT("extractor.crbm.k", crbm.k),
        LFSS_INT("extractor.crbm.epochs", crbm.epochs),
        LFSS_DOUBLE("extractor.crbm.learning_rate", crbm.learning_rate),
        LFSS_INT("extractor.crbm.batch_size", crbm.batch_size),
        LFSS_INT("extractor.crbm.stride", crbm.stride),
        LFSS_DOUBLE("agent.gamma", agent.gamma),
        LFSS_DOUBLE("agent.learning_rate", agent.learning_rate),
        LFSS_INT("agent.batch_size", agent.batch_size),
        LFSS_INT("agent.episodes", agent.episodes),
        LFSS_INT("agent.batches_per_episode", agent.batches_per_episode),
        LFSS_DOUBLE("agent.exploration_init", agent.exploration_init),
        LFSS_DOUBLE("agent.exploration_decay", agent.exploration_decay),
        Field{"agent.optimizer", [](const RunConfig& c) { return to_string(c.agent.optimizer); },
              [](RunConfig& c, const std::string& v) { c.agent.optimizer = optimizer_from_string(v); }},
        Field{"benchmarks", [](const RunConfig& c) { return benchmark_list(c.benchmarks); },
              [](RunConfig& c, const std::string& v) { c.benchmarks = parse_benchmarks(v); }},
        Field{"benchmarks.rsv_window", [](const RunConfig& c) { return std::to_string(c.benchmark_options.rsv_window); },
              [](RunConfig& c, const std::string& v) { c.benchmark_options.rsv_window = to_integer("benchmarks.rsv_window", v); }},
        Field{"benchmarks.mv_window", [](const RunConfig& c) { return std::to_string(c.benchmark_options.mv_window); },
              [](RunConfig& c, const std::string& v) { c.benchmark_options.mv_window = to_integer("benchmarks.mv_window", v); }},
        Field{"benchmarks.wmamr_window", [](const RunConfig& c) { return std::to_string(c.benchmark_options.wmamr_window); },
              [](RunConfig& c, const std::string& v) { c.benchmark_options.wmamr_window = to_integer("benchmarks.wmamr_window", v); }},
        LFSS_DOUBLE("benchmarks.wmamr_epsilon", benchmark_options.wmamr_epsilon),
        LFSS_DOUBLE("cost", cost),
        LFSS_DOUBLE("pv0", pv0),
        Field{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
              [](RunConfig& c, const std::string& v) {
                  const long long s = to_integer("seed", v);
                  if (s < 0) throw ValidationError("seed: must be non-negative");
                  c.seed = static_cast<std::uint64_t>(s);
              }},
        Field{"output_dir", [](const RunConfig& c) { return c.output_dir; },
              [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
    };
    return all;
}

#undef LFSS_DOUBLE
#undef LFSS_INT
#undef LFSS_BOOL

inline void require(bool ok, const std::string& key, const std::string& rule) {
    if (!ok) throw ValidationError(key + ": " + rule);
}

}  // namespace detail

inline void validate(const RunConfig& c) {
    using detail::require;
    require(!c.data_source.empty(), "data.source", "must be 'synth' or a CSV path");
    if (c.data_source != "synth")
        require(std::filesystem::exists(c.data_source), "data.source", "file '" + c.data_source + "' does not exist");
    require(c.synth.assets >= 1, "data.synth.assets", "must be at least 1");
    require(c.synth.length >= 10, "data.synth.length", "must be at least 10");
    require(std::isfinite(c.synth.drift), "data.synth.drift", "must be finite");
    require(c.synth.spread >= 0.0 && std::isfinite(c.synth.spread), "data.synth.spread", "must be non-negative");
    require(c.synth.vol >= 0.0 && std::isfinite(c.synth.vol), "data.synth.vol", "must be non-negative");
    require(c.risk_free > -1.0 && std::isfinite(c.risk_free), "data.risk_free", "must exceed -1");
    require(c.periods_per_year >= 1, "data.periods_per_year", "must be positive");
    require(c.split > 0.0 && c.split < 1.0, "split", "must lie in (0, 1)");
    require(c.window >= 2, "window", "must be at least 2");
    require(c.filter_kappa > 0.0 && std::isfinite(c.filter_kappa), "filter.kappa", "must be positive");
    if (c.extractor == ExtractorKind::autoencoder && c.ae.variant == AeVariant::dense)
        require(c.ae.latent >= 1 && c.ae.latent < c.window, "extractor.ae.latent", "must lie in [1, window)");
    if (c.ae.variant == AeVariant::conv)
        require(c.window % 4 == 0, "extractor.ae.variant", "conv needs a window divisible by 4");
    require(c.ae.epochs >= 1, "extractor.ae.epochs", "must be positive");
    require(c.ae.learning_rate > 0.0, "extractor.ae.learning_rate", "must be positive");
    require(c.ae.batch_size >= 1, "extractor.ae.batch_size", "must be positive");
    require(c.ae.stride >= 1, "extractor.ae.stride", "must be positive");
    require(c.zoom_block >= 1, "extractor.zoomsvd.block", "must be positive");
    require(c.crbm.hidden >= 1, "extractor.crbm.hidden", "must be positive");
    require(c.crbm.history >= 0, "extractor.crbm.history", "must be non-negative");
    require(c.crbm.k >= 1, "extractor.crbm.k", "must be positive");
    require(c.crbm.epochs >= 1, "extractor.crbm.epochs", "must be positive");
    require(c.crbm.learning_rate > 0.0, "extractor.crbm.learning_rate", "must be positive");
    require(c.crbm.batch_size >= 1, "extractor.crbm.batch_size", "must be positive");
    require(c.crbm.stride >= 1, "extractor.crbm.stride", "must be positive");
    require(c.cost >= 0.0 && c.cost < 1.0, "cost", "must lie in [0, 1)");
    require(c.pv0 > 0.0 && std::isfinite(c.pv0), "pv0", "must be positive");
    require(!c.output_dir.empty(), "output_dir", "must not be empty");
    validate(c.agent);
    validate(c.benchmark_options);
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::map<std::string, const detail::Field*> index;
    for (const auto& f : detail::fields()) index[f.key] = &f;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string body = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
        const std::string key = detail::trim(body.substr(0, eq)), value = detail::trim(body.substr(eq + 1));
        const auto it = index.find(key);
        if (it == index.end()) throw ParseError("unknown key '" + key + "'", number);
        if (seen.count(key))
            throw ParseError("duplicate key '" + key + "' (first set on line " + std::to_string(seen[key]) + ")", number);
        seen[key] = number;
        try {
            it->second->set(c, value);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), number);
        }
    }
    validate(c);
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    return parse_config(in);
}

/// Applies LFSS_SEED and LFSS_OUTPUT_DIR from the given lookup (getenv by default).
inline void apply_env_overrides(RunConfig& c,
                                const std::function<const char*(const char*)>& env = [](const char* k) {
                                    return std::getenv(k);
                                }) {
    if (const char* s = env("LFSS_SEED"); s && *s) {
        const long long v = detail::to_integer("LFSS_SEED", s);
        if (v < 0) throw ValidationError("LFSS_SEED: must be non-negative");
        c.seed = static_cast<std::uint64_t>(v);
    }
    if (const char* d = env("LFSS_OUTPUT_DIR"); d && *d) c.output_dir = d;
    validate(c);
}

/// Every key in canonical order, one "key = value" per line.
inline std::string dump(const RunConfig& c, bool include_output_dir = true) {
    std::string out;
    for (const auto& f : detail::fields()) {
        if (!include_output_dir && f.key == "output_dir") continue;
        out += f.key + " = " + f.get(c) + "\n";
    }
    return out;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(dump(c, false))); }

/// Seeds for each stochastic stage, derived from the run seed.
inline std::uint64_t stage_seed(const RunConfig& c, std::uint64_t stage) {
    return fnv1a(std::to_string(c.seed) + ":" + std::to_string(stage));
}

}  // namespace lfss

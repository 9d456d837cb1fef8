#pragma once

// Stage orchestration. Every stage reads its inputs from, and writes its
// artifacts to, a stage-named subdirectory of the run's output directory:
//
//   ingest/     series.csv, meta.json
//   filter/     series.csv (filtered, or a copy when filtering is off), filter.json
//   extractor/  extractor.json, loss_history.csv
//   agent/      policy.json, j_history.csv, pvm.csv
//   backtest/   index.json, <method>.json, <method>_weights.csv
//   report/     metrics.json, metrics.csv, pv.svg
//
// Features come from the filtered series; rewards and accounting always use
// the ingested prices. The agent trains on actions t = first valid state ..
// train_rows - 2 and every method is backtested on t = train_rows - 1 ..
// length - 2, so no test-period return is seen during training.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "lfss/autoencoder.hpp"
#include "lfss/backtest.hpp"
#include "lfss/benchmarks.hpp"
#include "lfss/config.hpp"
#include "lfss/container.hpp"
#include "lfss/crbm.hpp"
#include "lfss/error.hpp"
#include "lfss/lfss_state.hpp"
#include "lfss/market_data.hpp"
#include "lfss/policy.hpp"

namespace lfss {

enum class Stage { ingest, filter, train_extractor, train_agent, backtest, report };

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::filter: return "filter";
        case Stage::train_extractor: return "train-extractor";
        case Stage::train_agent: return "train-agent";
        case Stage::backtest: return "backtest";
        case Stage::report: return "report";
    }
    return "ingest";
}

inline const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> all{Stage::ingest,      Stage::filter,   Stage::train_extractor,
                                        Stage::train_agent, Stage::backtest, Stage::report};
    return all;
}

namespace stage_seeds {
inline constexpr std::uint64_t synth = 1, extractor = 2, policy_init = 3, agent = 4;
}

/// Display name of the agent for an extractor kind.
inline std::string agent_method_name(ExtractorKind k) {
    return k == ExtractorKind::none ? "baseline-RL" : "RL-" + to_string(k);
}

/// File-name form of a method name.
inline std::string method_slug(const std::string& method) {
    std::string out;
    for (char ch : method) out += std::isalnum(static_cast<unsigned char>(ch)) ? static_cast<char>(std::tolower(ch)) : '_';
    return out;
}

class Pipeline {
public:
    explicit Pipeline(RunConfig cfg, std::ostream* log = nullptr)
        : cfg_(std::move(cfg)), hash_(config_hash(cfg_)), root_(cfg_.output_dir), log_(log) {
        validate(cfg_);
    }

    const RunConfig& config() const noexcept { return cfg_; }
    const std::string& hash() const noexcept { return hash_; }
    std::filesystem::path path(const std::string& stage, const std::string& file) const { return root_ / stage / file; }

    void run(Stage s) {
        note("stage " + to_string(s));
        switch (s) {
            case Stage::ingest: ingest(); break;
            case Stage::filter: filter(); break;
            case Stage::train_extractor: train_extractor(); break;
            case Stage::train_agent: train_agent(); break;
            case Stage::backtest: backtest(); break;
            case Stage::report: report(); break;
        }
    }

    void run_all() { run_from(Stage::ingest); }

    /// Runs `first` and every later stage.
    void run_from(Stage first) {
        for (Stage s : all_stages())
            if (s >= first) run(s);
    }

    // -----------------------------------------------------------------------
    // Stages

    void ingest() {
        OhlcSeries s;
        if (cfg_.data_source == "synth") {
            s = synthesize();
        } else {
            s = load_csv(cfg_.data_source, {}, cfg_.risk_free, cfg_.periods_per_year);
        }
        const std::size_t train = train_rows(s.length(), cfg_.split);
        if (train < 2 || s.length() - train < 2)
            throw ValidationError("split " + std::to_string(cfg_.split) + " leaves fewer than 2 rows on one side");
        write_series(path("ingest", "series.csv"), s);
        json meta = make_container("ingest", hash_);
        meta["source"] = cfg_.data_source;
        meta["tickers"] = s.tickers;
        meta["rows"] = s.length();
        meta["train_rows"] = train;
        meta["first_date"] = s.dates.front();
        meta["last_date"] = s.dates.back();
        write_json_file(path("ingest", "meta.json"), meta);
    }

    void filter() {
        const OhlcSeries raw = prices();
        json j = make_container("filter_stage", hash_);
        j["enabled"] = cfg_.filter_enabled;
        if (cfg_.filter_enabled) {
            const FilterFit fit = fit_filter(raw, train_rows(raw.length(), cfg_.split), cfg_.filter_kappa);
            j["fit"] = filter_fit_to_json(fit, hash_);
            write_series(path("filter", "series.csv"), apply_filter(raw, fit));
        } else {
            write_series(path("filter", "series.csv"), raw);
        }
        write_json_file(path("filter", "filter.json"), j);
    }

    void train_extractor() {
        const OhlcSeries fs = features_series();
        const std::size_t train = train_rows(fs.length(), cfg_.split);
        json j = make_container("extractor", hash_);
        j["extractor"] = to_string(cfg_.extractor);
        std::vector<double> history;
        const Eigen::Index m = cfg_.window;
        if (cfg_.extractor == ExtractorKind::autoencoder) {
            const AeTopology topo = cfg_.ae.variant == AeVariant::conv ? AeTopology::conv_default(static_cast<int>(m))
                                                                       : AeTopology::dense_default(static_cast<int>(m), cfg_.ae.latent);
            const TrainingWindows tw = training_windows(fs, static_cast<Eigen::Index>(train) - 1, m, cfg_.ae.stride);
            AeTrainConfig tc;
            tc.epochs = cfg_.ae.epochs;
            tc.learning_rate = cfg_.ae.learning_rate;
            tc.batch_size = cfg_.ae.batch_size;
            tc.seed = stage_seed(cfg_, stage_seeds::extractor);
            const AeTrainResult r = train_autoencoder(topo, tc, tw.visible);
            j["model"] = autoencoder_to_json(r.weights, hash_);
            history = r.loss_history;
        } else if (cfg_.extractor == ExtractorKind::crbm) {
            const TrainingWindows tw =
                training_windows(fs, static_cast<Eigen::Index>(train) - 1, m, cfg_.crbm.stride, cfg_.crbm.history);
            CdConfig cd;
            cd.k = cfg_.crbm.k;
            cd.learning_rate = cfg_.crbm.learning_rate;
            cd.epochs = cfg_.crbm.epochs;
            cd.batch_size = cfg_.crbm.batch_size;
            cd.seed = stage_seed(cfg_, stage_seeds::extractor);
            const CrbmTrainResult r = train_crbm(cfg_.crbm.hidden, cfg_.crbm.history, cd, tw.visible, tw.history);
            j["model"] = crbm_to_json(r.params, hash_);
            history = r.error_history;
        } else {
            j["model"] = nullptr;  // nothing to learn for zoomsvd or none
        }
        write_json_file(path("extractor", "extractor.json"), j);
        write_text_file(path("extractor", "loss_history.csv"), loss_history_csv(history));
    }

    void train_agent() {
        const OhlcSeries px = prices();
        const OhlcSeries fs = features_series();
        const FeatureBuilder fb(fs, load_extractor(), state_options());
        const auto train = static_cast<Eigen::Index>(train_rows(px.length(), cfg_.split));
        const Eigen::Index first = fb.first_valid(), last = train - 2;
        if (last < first)
            throw ValidationError("training split has no complete state: first valid index " + std::to_string(first) +
                                  ", last training action " + std::to_string(last));
        const MarketContext ctx(fb, first, last, cfg_.cost, &px);
        AgentConfig ac = cfg_.agent;
        ac.seed = stage_seed(cfg_, stage_seeds::agent);
        const TrainResult r =
            train_agent_impl(init_policy(topology_for(fb), stage_seed(cfg_, stage_seeds::policy_init)), ctx, ac);
        write_json_file(path("agent", "policy.json"), policy_to_json(r.network, ac, to_string(cfg_.extractor), hash_));
        write_text_file(path("agent", "j_history.csv"), j_history_csv(r.j_history));
        std::vector<Eigen::VectorXd> slots;
        for (Eigen::Index t = r.pvm.first() + 1; t <= r.pvm.last(); ++t) slots.push_back(r.pvm.at(t));
        write_text_file(path("agent", "pvm.csv"), weights_csv(fs, r.pvm.first() + 1, slots));
    }

    void backtest() {
        const OhlcSeries px = prices();
        const OhlcSeries fs = features_series();
        const FeatureBuilder fb(fs, load_extractor(), state_options());
        const json pj = require_file("agent", "policy.json", Stage::train_agent);
        if (pj.value("kind", "") != "policy") throw ValidationError("agent/policy.json is not a policy container");
        if (pj.value("extractor", "") != to_string(cfg_.extractor))
            throw OrderingError("agent/policy.json was trained with extractor '" + pj.value("extractor", "") +
                                "'; run 'train-agent' again");
        const PolicyNetwork net = policy_from_json(pj);
        const auto [first, last] = test_range(fb);

        json index = make_container("backtest_index", hash_);
        index["first_action"] = first;
        index["last_action"] = last;
        index["methods"] = json::array();
        auto record = [&](const BacktestResult& r) {
            const std::string slug = method_slug(r.method);
            write_json_file(path("backtest", slug + ".json"), backtest_to_json(r, hash_));
            write_text_file(path("backtest", slug + "_weights.csv"), weights_csv(px, first, r.weights));
            index["methods"].push_back({{"method", r.method}, {"file", slug + ".json"}});
        };
        record(run_backtest(agent_method_name(cfg_.extractor), agent_actions(net, fb), px, first, last, cfg_.cost, cfg_.pv0));
        for (Benchmark b : cfg_.benchmarks)
            record(run_backtest(to_string(b), fixed_actions(run_benchmark(b, px, first, last, cfg_.benchmark_options), first),
                                px, first, last, cfg_.cost, cfg_.pv0));
        write_json_file(path("backtest", "index.json"), index);
    }

    void report() {
        const json index = require_file("backtest", "index.json", Stage::backtest);
        std::vector<Metrics> metrics;
        std::vector<std::string> names;
        std::vector<std::vector<double>> pvs;
        for (const auto& entry : index.at("methods")) {
            const std::string file = entry.at("file").get<std::string>();
            const BacktestResult r = backtest_from_json(require_file("backtest", file, Stage::backtest));
            metrics.push_back(compute_metrics(r, cfg_.periods_per_year));
            names.push_back(r.method);
            pvs.push_back(r.pv);
        }
        write_json_file(path("report", "metrics.json"), metrics_report_json(metrics, hash_));
        write_text_file(path("report", "metrics.csv"), metrics_csv(metrics));
        write_text_file(path("report", "pv.svg"), pv_chart_svg(names, pvs));
    }

    // -----------------------------------------------------------------------
    // Shared pieces

    OhlcSeries synthesize() const {
        const int n = cfg_.synth.assets;
        std::vector<double> drifts(static_cast<std::size_t>(n)), vols(static_cast<std::size_t>(n), cfg_.synth.vol);
        for (int i = 0; i < n; ++i) {
            const double pos = n > 1 ? static_cast<double>(i) / (n - 1) - 0.5 : 0.0;
            drifts[static_cast<std::size_t>(i)] = cfg_.synth.drift + cfg_.synth.spread * pos;
        }
        SynthOptions opt;
        opt.risk_free_annual = cfg_.risk_free;
        opt.periods_per_year = cfg_.periods_per_year;
        return synth_gbm(stage_seed(cfg_, stage_seeds::synth), static_cast<std::size_t>(n),
                         static_cast<std::size_t>(cfg_.synth.length), drifts, vols, opt);
    }

    OhlcSeries prices() const {
        require_exists("ingest", "series.csv", Stage::ingest);
        return load_csv(path("ingest", "series.csv").string(), {}, cfg_.risk_free, cfg_.periods_per_year);
    }

    OhlcSeries features_series() const {
        require_exists("filter", "series.csv", Stage::filter);
        CsvSchema schema;
        schema.check_ohlc_order = false;
        return load_csv(path("filter", "series.csv").string(), schema, cfg_.risk_free, cfg_.periods_per_year);
    }

    StateOptions state_options() const {
        return StateOptions{cfg_.window, cfg_.close_only_covariance, cfg_.zoom_block};
    }

    Extractor load_extractor() const {
        Extractor e;
        e.kind = cfg_.extractor;
        if (cfg_.extractor == ExtractorKind::none) return e;
        const json j = require_file("extractor", "extractor.json", Stage::train_extractor);
        if (j.value("extractor", "") != to_string(cfg_.extractor))
            throw OrderingError("extractor/extractor.json holds a '" + j.value("extractor", "") +
                                "' extractor; run 'train-extractor' again");
        if (cfg_.extractor == ExtractorKind::autoencoder) e.autoencoder = autoencoder_from_json(j.at("model"));
        if (cfg_.extractor == ExtractorKind::crbm) e.crbm = crbm_from_json(j.at("model"));
        return e;
    }

    /// Common action range of the agent and every configured benchmark.
    std::pair<Eigen::Index, Eigen::Index> test_range(const FeatureBuilder& fb) const {
        const auto T = fb.length();
        Eigen::Index first = std::max<Eigen::Index>(static_cast<Eigen::Index>(train_rows(static_cast<std::size_t>(T), cfg_.split)) - 1,
                                                    fb.first_valid());
        for (Benchmark b : cfg_.benchmarks) first = std::max(first, benchmark_first_index(b, cfg_.benchmark_options));
        const Eigen::Index last = T - 2;
        if (last < first)
            throw ValidationError("test split too short: first action " + std::to_string(first) + ", last " +
                                  std::to_string(last));
        return {first, last};
    }

private:
    static TrainResult train_agent_impl(PolicyNetwork net, const MarketContext& ctx, const AgentConfig& ac) {
        return lfss::train_agent(std::move(net), ctx, ac);
    }

    void note(const std::string& msg) const {
        if (log_) *log_ << "[lfss] " << msg << '\n';
    }

    void require_exists(const std::string& stage, const std::string& file, Stage producer) const {
        if (!std::filesystem::exists(path(stage, file)))
            throw OrderingError(stage + "/" + file + " is missing; run '" + to_string(producer) + "' first");
    }

    json require_file(const std::string& stage, const std::string& file, Stage producer) const {
        require_exists(stage, file, producer);
        return read_json_file(path(stage, file));
    }

    static void write_series(const std::filesystem::path& p, const OhlcSeries& s) {
        std::ostringstream out;
        write_csv(out, s);
        write_text_file(p, out.str());
    }

    RunConfig cfg_;
    std::string hash_;
    std::filesystem::path root_;
    std::ostream* log_;
};

}  // namespace lfss

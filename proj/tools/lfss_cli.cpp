// Command-line front end for the pipeline stages.
//
//   lfss <stage> --config run.cfg [--output-dir DIR] [--seed N] [--quiet]
//   lfss pipeline --config run.cfg
//   lfss config --dump [--config run.cfg]
//
// Exit status is 0 on success and 1 for invalid input such as a bad config
// or a stage run out of order. Runtime failures such as divergence or an
// unreadable file exit with 2.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "lfss/config.hpp"
#include "lfss/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string output_dir;
    std::optional<long long> seed;
    bool quiet = false;
};

lfss::RunConfig resolve_config(const CommonOptions& o) {
    lfss::RunConfig c = o.config_path.empty() ? lfss::RunConfig{} : lfss::load_config(o.config_path);
    lfss::apply_env_overrides(c);
    if (o.seed) {
        if (*o.seed < 0) throw lfss::ValidationError("--seed: must be non-negative");
        c.seed = static_cast<std::uint64_t>(*o.seed);
    }
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    lfss::validate(c);
    return c;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
    auto* opt = cmd->add_option("-c,--config", o.config_path, "Run configuration file (key = value lines)");
    if (config_required) opt->required();
    cmd->add_option("-o,--output-dir", o.output_dir, "Override output_dir");
    cmd->add_option("-s,--seed", o.seed, "Override seed");
    cmd->add_flag("-q,--quiet", o.quiet, "Suppress stage progress on stderr");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-feature state-space portfolio pipeline"};
    app.require_subcommand(1);
    CommonOptions opts;
    std::optional<lfss::Stage> stage;
    bool whole = false, dump = false;

    for (lfss::Stage s : lfss::all_stages()) {
        auto* cmd = app.add_subcommand(lfss::to_string(s), "Run the " + lfss::to_string(s) + " stage");
        add_common(cmd, opts, true);
        cmd->callback([&stage, s] { stage = s; });
    }
    auto* all = app.add_subcommand("pipeline", "Run every stage in order");
    add_common(all, opts, true);
    all->callback([&whole] { whole = true; });
    auto* cfg = app.add_subcommand("config", "Inspect the resolved configuration");
    add_common(cfg, opts, false);
    cfg->add_flag("--dump", dump, "Print every key with its resolved value")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const lfss::RunConfig c = resolve_config(opts);
        if (dump) {
            std::cout << lfss::dump(c) << "config_hash = " << lfss::config_hash(c) << '\n';
            return 0;
        }
        lfss::Pipeline p(c, opts.quiet ? nullptr : &std::cerr);
        if (whole)
            p.run_all();
        else
            p.run(*stage);
        return 0;
    } catch (const lfss::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const lfss::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

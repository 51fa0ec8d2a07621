#include <cstdio>
#include <exception>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tailcal/csv.hpp"
#include "tailcal/error.hpp"
#include "tailcal/experiment.hpp"
#include "tailcal/ingest.hpp"

namespace {

using tailcal::ExperimentConfig;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quick = false;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_flag("--quick", opts.quick, "small test sets for CI");
    cmd->add_option("--threads", opts.threads, "shard count for violation counting");
}

ExperimentConfig load(const CommonOpts& opts, tailcal::ExperimentKind kind) {
    ExperimentConfig cfg = tailcal::load_experiment_config(opts.config_path);
    if (cfg.kind != kind) {
        throw tailcal::Error(tailcal::ErrorKind::config,
                             "config declares a different experiment kind");
    }
    cfg.out_dir = opts.out_dir;
    if (opts.seed_set) cfg.rng.seed = opts.seed;
    cfg.quick = opts.quick;
    cfg.threads = opts.threads;
    return cfg;
}

int run_ingest(const CommonOpts& opts) {
    const tailcal::Config cfg = tailcal::Config::parse_file(opts.config_path);
    const std::string path = cfg.get_string("ingest.path");
    const tailcal::IngestReport ing = tailcal::ingest_scenarios(path, tailcal::schema_from_config(cfg));
    nlohmann::json report;
    report["source"] = path;
    report["scenarios"] = ing.dataset.scenarios.size();
    report["malformed_lines"] = ing.malformed_lines;
    report["partial_segments"] = ing.partial_segments;
    std::printf("%s\n", report.dump(2).c_str());
    return 0;
}

int run_export_tube(const CommonOpts& opts) {
    const tailcal::Config cfg = tailcal::Config::parse_file(opts.config_path);
    const tailcal::IngestReport ing =
        tailcal::ingest_scenarios(cfg.get_string("ingest.path"), tailcal::schema_from_config(cfg));
    std::optional<int> mode;
    if (cfg.has("export_tube.mode")) mode = static_cast<int>(cfg.get_u64("export_tube.mode"));
    const std::vector<double> levels = cfg.get_list("export_tube.levels", {5.0});
    const double split_time = cfg.get_double("export_tube.split_time", 2.0);
    const std::string csv = tailcal::export_tube_csv(ing.dataset, mode, levels, split_time);
    std::filesystem::create_directories(opts.out_dir);
    tailcal::write_file(opts.out_dir + "/tube.csv", csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tailcal: trajectory-uncertainty calibration audits"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd;
        CommonOpts opts;
        tailcal::ExperimentKind kind;
    };
    std::vector<std::unique_ptr<Sub>> subs;
    for (tailcal::ExperimentKind kind :
         {tailcal::ExperimentKind::gaussian_audit, tailcal::ExperimentKind::gmm_audit,
          tailcal::ExperimentKind::quantile_audit, tailcal::ExperimentKind::quantile_scaling,
          tailcal::ExperimentKind::scenario_opt, tailcal::ExperimentKind::hmm_intervals,
          tailcal::ExperimentKind::ingest_audit}) {
        auto sub = std::make_unique<Sub>();
        std::string name(tailcal::experiment_kind_name(kind));
        for (char& c : name) {
            if (c == '_') c = '-';
        }
        sub->cmd = app.add_subcommand(name, "run the " + name + " recipe");
        sub->kind = kind;
        add_common(sub->cmd, sub->opts);
        subs.push_back(std::move(sub));
    }
    CommonOpts ingest_opts;
    CLI::App* ingest_cmd = app.add_subcommand("ingest", "validate and summarize a dataset");
    add_common(ingest_cmd, ingest_opts);
    CommonOpts export_opts;
    CLI::App* export_cmd = app.add_subcommand("export-tube", "per-timestep sigma-tube plot data");
    add_common(export_cmd, export_opts);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int rc = app.exit(e);
            return rc == 0 ? 0 : 2;
        }
        if (ingest_cmd->parsed()) return run_ingest(ingest_opts);
        if (export_cmd->parsed()) return run_export_tube(export_opts);
        for (const auto& sub : subs) {
            if (sub->cmd->parsed()) {
                tailcal::run_experiment(load(sub->opts, sub->kind));
                return 0;
            }
        }
        return 2;
    } catch (const tailcal::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return tailcal::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

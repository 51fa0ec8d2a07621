#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tailcal/config.hpp"
#include "tailcal/rng.hpp"
#include "tailcal/trajectory.hpp"

namespace tailcal {

enum class ExperimentKind {
    gaussian_audit,
    gmm_audit,
    quantile_audit,
    quantile_scaling,
    scenario_opt,
    hmm_intervals,
    ingest_audit,
};

std::string_view experiment_kind_name(ExperimentKind kind);
ExperimentKind experiment_kind_from_name(std::string_view name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::gaussian_audit;
    Config raw;            // recipe-specific keys
    std::string out_dir = ".";
    RngSpec rng{12345, 1};
    bool quick = false;    // 1e5-point test sets for CI
    int threads = 1;
};

// Loads kind/seed/stream from [experiment] unless overridden later.
ExperimentConfig load_experiment_config(const std::string& path);

// Executes the recipe and writes curve/scaling CSVs, summary.json, and
// manifest.json into cfg.out_dir. Outputs depend only on (config, seed),
// never on the thread count.
void run_experiment(const ExperimentConfig& cfg);

// Per-timestep centers and sigma-multiple half-widths of the lateral
// marginal over the action suffixes of `data` (optionally one mode only).
std::string export_tube_csv(const Dataset& data, std::optional<int> mode_label,
                            std::span<const double> levels, double split_time);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace tailcal

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tailcal/geometry.hpp"

namespace tailcal {

// Time-stamped 2D path sampled at a fixed rate, endpoints inclusive.
class Trajectory {
  public:
    Trajectory() = default;
    Trajectory(std::vector<Vec2> positions, double sample_rate);

    const std::vector<Vec2>& positions() const { return positions_; }
    double sample_rate() const { return sample_rate_; }
    double duration() const { return static_cast<double>(positions_.size() - 1) / sample_rate_; }
    std::size_t size() const { return positions_.size(); }

    // Index of the sample at time `t`; throws ErrorKind::grid if `t` is off
    // the sample grid and ErrorKind::range if outside [0, duration].
    std::size_t sample_index(double t) const;

    Trajectory slice(std::size_t first, std::size_t last) const;  // inclusive

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

  private:
    std::vector<Vec2> positions_;
    double sample_rate_ = 1.0;
};

struct EnvironmentContext {
    std::vector<double> features;

    friend bool operator==(const EnvironmentContext&, const EnvironmentContext&) = default;
};

// Stable identity used for deduplication: where the scenario came from and
// its record index there.
struct ScenarioId {
    std::string source;
    std::uint64_t record = 0;

    friend bool operator==(const ScenarioId&, const ScenarioId&) = default;
    friend auto operator<=>(const ScenarioId&, const ScenarioId&) = default;
};

struct Scenario {
    Trajectory trajectory;
    EnvironmentContext context;
    std::optional<int> mode_label;
    ScenarioId id;
};

struct StateAction {
    Trajectory state_prefix;
    EnvironmentContext context;
    Trajectory action;
};

struct PruningConfig {
    double epsilon_traj = 0.6096;  // 2 ft in meters
    double epsilon_env = 2.0;
    double prefix_seconds = 2.0;
};

enum class DatasetRole { train, test };

struct Dataset {
    std::vector<Scenario> scenarios;
    DatasetRole role = DatasetRole::train;
    double sentinel = 1e9;  // context value marking an absent neighbor

    // Throws ErrorKind::schema unless all members share one sample rate and
    // context dimension.
    void validate() const;
};

StateAction split_state_action(const Scenario& scenario, double split_time);

// Train scenarios whose state prefix and context are inf-norm-close to the
// test scenario (strict inequalities). A sentinel on one side only always
// breaks closeness.
Dataset equivalent_scenarios(const Scenario& test, const Dataset& train, const PruningConfig& cfg);

// Union of equivalent_scenarios over the test set, deduplicated by ScenarioId.
Dataset prune_training_set(const Dataset& test, const Dataset& train, const PruningConfig& cfg);

// First `horizon` seconds of an action trajectory.
Trajectory replan_window(const Trajectory& action, double horizon);

}  // namespace tailcal

#include "tailcal/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tailcal/error.hpp"

namespace tailcal {

Trajectory::Trajectory(std::vector<Vec2> positions, double sample_rate)
    : positions_(std::move(positions)), sample_rate_(sample_rate) {
    if (sample_rate_ <= 0.0) throw Error(ErrorKind::range, "sample_rate must be > 0");
    if (positions_.empty()) throw Error(ErrorKind::range, "trajectory needs at least one sample");
    for (const Vec2& p : positions_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error(ErrorKind::range, "trajectory coordinates must be finite");
        }
    }
}

std::size_t Trajectory::sample_index(double t) const {
    if (t < 0.0 || t > duration() + 1e-12) {
        throw Error(ErrorKind::range, "time " + std::to_string(t) + " outside [0, " +
                                          std::to_string(duration()) + "]");
    }
    const double steps = t * sample_rate_;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
        throw Error(ErrorKind::grid, "time " + std::to_string(t) + " not on the sample grid");
    }
    return static_cast<std::size_t>(rounded);
}

Trajectory Trajectory::slice(std::size_t first, std::size_t last) const {
    return Trajectory(std::vector<Vec2>(positions_.begin() + static_cast<std::ptrdiff_t>(first),
                                        positions_.begin() + static_cast<std::ptrdiff_t>(last) + 1),
                      sample_rate_);
}

void Dataset::validate() const {
    if (scenarios.empty()) return;
    const double rate = scenarios.front().trajectory.sample_rate();
    const std::size_t dim = scenarios.front().context.features.size();
    for (const Scenario& s : scenarios) {
        if (s.trajectory.sample_rate() != rate) {
            throw Error(ErrorKind::schema, "mixed sample rates in dataset");
        }
        if (s.context.features.size() != dim) {
            throw Error(ErrorKind::schema, "mixed context dimensions in dataset");
        }
    }
}

StateAction split_state_action(const Scenario& scenario, double split_time) {
    const Trajectory& traj = scenario.trajectory;
    if (split_time <= 0.0 || split_time >= traj.duration()) {
        throw Error(ErrorKind::range, "split_time must lie strictly inside (0, duration)");
    }
    const std::size_t idx = traj.sample_index(split_time);
    return StateAction{traj.slice(0, idx), scenario.context, traj.slice(idx, traj.size() - 1)};
}

namespace {

// inf-norm over the first `prefix_samples+1` samples, both coordinates
double prefix_distance(const Trajectory& a, const Trajectory& b, std::size_t prefix_samples) {
    double d = 0.0;
    for (std::size_t i = 0; i <= prefix_samples; ++i) {
        d = std::max(d, std::abs(a.positions()[i].x - b.positions()[i].x));
        d = std::max(d, std::abs(a.positions()[i].y - b.positions()[i].y));
    }
    return d;
}

// inf-norm over features; sentinel-vs-value mismatch is infinitely far
double context_distance(const EnvironmentContext& a, const EnvironmentContext& b, double sentinel) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        const bool sa = a.features[i] == sentinel;
        const bool sb = b.features[i] == sentinel;
        if (sa != sb) return std::numeric_limits<double>::infinity();
        if (sa) continue;
        d = std::max(d, std::abs(a.features[i] - b.features[i]));
    }
    return d;
}

}  // namespace

Dataset equivalent_scenarios(const Scenario& test, const Dataset& train, const PruningConfig& cfg) {
    if (cfg.epsilon_traj <= 0.0 || cfg.epsilon_env <= 0.0) {
        throw Error(ErrorKind::range, "pruning epsilons must be > 0");
    }
    Dataset out;
    out.role = train.role;
    out.sentinel = train.sentinel;
    for (const Scenario& s : train.scenarios) {
        if (s.context.features.size() != test.context.features.size() ||
            s.trajectory.sample_rate() != test.trajectory.sample_rate()) {
            throw Error(ErrorKind::schema, "incompatible scenario in equivalence scan");
        }
        const std::size_t prefix =
            std::min({test.trajectory.sample_index(
                          std::min(cfg.prefix_seconds, test.trajectory.duration())),
                      s.trajectory.size() - 1, test.trajectory.size() - 1});
        if (prefix_distance(s.trajectory, test.trajectory, prefix) < cfg.epsilon_traj &&
            context_distance(s.context, test.context, train.sentinel) < cfg.epsilon_env) {
            out.scenarios.push_back(s);
        }
    }
    return out;
}

Dataset prune_training_set(const Dataset& test, const Dataset& train, const PruningConfig& cfg) {
    Dataset out;
    out.role = train.role;
    out.sentinel = train.sentinel;
    std::set<ScenarioId> seen;
    for (const Scenario& t : test.scenarios) {
        Dataset eq = equivalent_scenarios(t, train, cfg);
        for (Scenario& s : eq.scenarios) {
            if (seen.insert(s.id).second) out.scenarios.push_back(std::move(s));
        }
    }
    return out;
}

Trajectory replan_window(const Trajectory& action, double horizon) {
    if (horizon > action.duration() + 1e-12) {
        throw Error(ErrorKind::range, "replanning horizon exceeds action duration");
    }
    return action.slice(0, action.sample_index(horizon));
}

}  // namespace tailcal

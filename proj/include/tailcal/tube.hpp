#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tailcal/geometry.hpp"
#include "tailcal/trajectory.hpp"

namespace tailcal {

// N actions, each a fixed-length sequence of 2D cross-section points.
// Point of action `a` at timestep `t` sits at pts[a * timesteps + t].
struct ActionSet {
    std::size_t n = 0;
    std::size_t timesteps = 0;
    std::vector<Vec2> pts;

    Vec2 at(std::size_t action, std::size_t t) const { return pts[action * timesteps + t]; }

    static ActionSet from_points(std::span<const Vec2> points);
    // Restricts each action to its first `window` seconds.
    static ActionSet from_actions(std::span<const Trajectory> actions, double window);
};

struct CrossSection {
    std::vector<Vec2> polygon;  // CCW; 1-2 vertices when the section is degenerate
    double tol = 1e-9;          // membership slack, scaled to the section's extent

    bool contains(Vec2 p) const { return point_in_convex_polygon(polygon, p, tol); }
};

class QuantileTube {
  public:
    QuantileTube() = default;
    QuantileTube(std::vector<CrossSection> sections, double target_delta,
                 std::size_t coverage_count);

    const std::vector<CrossSection>& sections() const { return sections_; }
    double target_delta() const { return target_delta_; }
    std::size_t coverage_count() const { return coverage_count_; }

    bool contains(std::span<const Vec2> action_window) const;

  private:
    std::vector<CrossSection> sections_;
    double target_delta_ = 0.0;
    std::size_t coverage_count_ = 0;
};

struct ScenarioHull {
    std::vector<CrossSection> sections;
    std::size_t support_count = 0;  // max hull vertex count over timesteps

    bool contains(std::span<const Vec2> action_window) const;
};

// Exact greedy shrinking: each step removes the action whose removal most
// decreases the summed cross-section measure (area, or extent for degenerate
// sections); ties go to the lowest action index. The removal order is a
// prefix sequence, so tubes at different deltas nest.
class GreedyPeel {
  public:
    GreedyPeel(const ActionSet& actions, std::size_t max_removals);

    const std::vector<std::size_t>& removal_order() const { return order_; }

    QuantileTube tube_at(double delta) const;

  private:
    const ActionSet* actions_;
    std::vector<std::size_t> order_;
};

QuantileTube fit_quantile_tube(const ActionSet& actions, double delta);
ScenarioHull fit_scenario_hull(const ActionSet& actions);

// Smallest epsilon with sum_{i<k} C(N,i) eps^i (1-eps)^(N-i) <= beta.
double campi_violation_bound(std::size_t n, std::size_t k, double beta);

}  // namespace tailcal

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tailcal/model.hpp"
#include "tailcal/tube.hpp"

namespace tailcal {

struct DeltaGrid {
    std::vector<double> deltas;  // strictly decreasing, all in (0, 1)

    // 10^{-k/2} for k = 2..16: delta from 1e-1 down to 1e-8.
    static DeltaGrid default_grid();

    void validate() const;
    std::size_t size() const { return deltas.size(); }
};

struct CurvePoint {
    double delta = 0.0;
    double expected_count = 0.0;  // delta * n_test
    std::size_t observed_count = 0;
    double ratio = 0.0;           // observed / expected proportions
    double log10_ratio = 0.0;     // -inf iff observed == 0
};

struct CalibrationCurve {
    std::vector<CurvePoint> points;
    std::size_t n_test = 0;
};

// Violations of the delta-region over the windowed test actions; each action
// counts at most once.
std::size_t count_violations(const FittedModel& model, const ActionSet& test, double delta);
std::size_t count_violations(const FittedModel& model, std::span<const Trajectory> test,
                             double delta, double window);

CalibrationCurve calibration_curve(const FittedModel& model, const ActionSet& test,
                                   const DeltaGrid& grid, int threads = 1);
CalibrationCurve calibration_curve(const FittedModel& model, std::span<const Trajectory> test,
                                   const DeltaGrid& grid, double window, int threads = 1);

struct DeltaMinResult {
    std::optional<double> delta_min;
    double eta = 0.5;
    std::vector<bool> accurate;  // per curve point
};

// A grid delta is accurate iff observed >= 1 and |log10(expected/observed)|
// <= eta. With monotone_prefix (default) delta_min is the smallest grid
// delta whose every larger grid delta is also accurate; otherwise the bare
// minimum over accurate deltas.
DeltaMinResult delta_min(const CalibrationCurve& curve, double eta, bool monotone_prefix = true);

struct ScalingFit {
    std::vector<std::pair<double, double>> points;  // (n_train, delta_min)
    double slope = 0.0;      // in (log10 N, log10 delta_min) space
    double intercept = 0.0;
    double r2 = 0.0;

    double extrapolate(double delta_target) const;  // N(delta_target)
};

ScalingFit scaling_fit(std::span<const std::pair<double, double>> points);

struct VcBoundQuery {
    double delta = 0.0;
    double vcdim = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
};

// c1 (1/delta) ln(1/delta) + c2 vcdim / delta: the Omega-expression with
// unit constants, an order-of-magnitude comparator rather than a certified
// bound.
double vc_lower_bound(const VcBoundQuery& q);

}  // namespace tailcal

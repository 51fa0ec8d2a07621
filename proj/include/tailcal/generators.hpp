#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "tailcal/geometry.hpp"
#include "tailcal/rng.hpp"
#include "tailcal/trajectory.hpp"

namespace tailcal {

enum class NoiseKind { none, uniform, symmetric_nonuniform };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double noise_frac = 0.0;  // fraction of the per-axis range of the clean sample
};

struct Cov2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;
};

// One mode of a 1D two-mode problem.
struct ModeSpec {
    enum class Dist { gaussian, uniform };
    Dist dist = Dist::gaussian;
    double a = 0.0;  // mean  (gaussian)  or lo (uniform)
    double b = 1.0;  // sigma (gaussian)  or hi (uniform)
    std::size_t count = 1;
};

struct LaneGenConfig {
    double sample_rate = 25.0;
    double duration = 10.0;
    double speed = 20.0;        // longitudinal m/s
    double jitter_sigma = 0.1;  // lateral noise, meters
    double lane_width = 3.5;    // lateral offset of a completed swerve
    double ramp_seconds = 3.0;
    double swerve_window_lo = 2.0;  // earliest ramp start
    double swerve_window_hi = 7.0;  // latest ramp start
};

std::vector<Vec2> gen_gaussian_2d(std::size_t n, Vec2 mean, const Cov2& cov, const CounterRng& rng);

std::vector<Vec2> gen_noisy_gaussian_2d(std::size_t n, const Cov2& cov, const NoiseSpec& noise,
                                        const CounterRng& rng);

std::pair<std::vector<double>, std::vector<double>> gen_two_mode_1d(const ModeSpec& mode1,
                                                                    const ModeSpec& mode2,
                                                                    const CounterRng& rng);

// One straight-lane driving scenario; index-addressed so datasets can be
// generated (or re-generated) scenario by scenario.
Scenario gen_lane_scenario(std::size_t index, double p_swerve, const LaneGenConfig& cfg,
                           const CounterRng& rng);

Dataset gen_lane_trajectories(std::size_t n, double p_swerve, double sample_rate,
                              const CounterRng& rng, const LaneGenConfig& base = LaneGenConfig{});

// Inverse CDF of the magnitude law used by symmetric_nonuniform noise
// (Beta(1/2, 2)); exposed for tests.
double noise_magnitude_icdf(double u);

}  // namespace tailcal

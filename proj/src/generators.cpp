#include "tailcal/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tailcal/error.hpp"

namespace tailcal {

namespace {

struct Chol2 {
    double l00, l10, l11;
};

Chol2 cholesky2(const Cov2& cov) {
    const double det = cov.xx * cov.yy - cov.xy * cov.xy;
    if (!(cov.xx > 0.0) || !(det > 0.0)) {
        throw Error(ErrorKind::matrix, "covariance must be symmetric positive definite");
    }
    const double l00 = std::sqrt(cov.xx);
    const double l10 = cov.xy / l00;
    return {l00, l10, std::sqrt(cov.yy - l10 * l10)};
}

constexpr std::uint64_t kNoiseLane = 0x6e6f697365ULL;  // noise substream id

}  // namespace

std::vector<Vec2> gen_gaussian_2d(std::size_t n, Vec2 mean, const Cov2& cov, const CounterRng& rng) {
    if (n < 1) throw Error(ErrorKind::range, "n must be >= 1");
    const Chol2 L = cholesky2(cov);
    std::vector<Vec2> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z0, z1;
        rng.normal_pair(i, z0, z1);
        out[i] = {mean.x + L.l00 * z0, mean.y + L.l10 * z0 + L.l11 * z1};
    }
    return out;
}

double noise_magnitude_icdf(double u) {
    // F(x) = sqrt(x) (3 - x) / 2 on [0,1]; bisection on y = sqrt(x)
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double y = 0.5 * (lo + hi);
        (y * (3.0 - y * y) * 0.5 < u ? lo : hi) = y;
    }
    const double y = 0.5 * (lo + hi);
    return y * y;
}

std::vector<Vec2> gen_noisy_gaussian_2d(std::size_t n, const Cov2& cov, const NoiseSpec& noise,
                                        const CounterRng& rng) {
    if (noise.noise_frac < 0.0 || noise.noise_frac > 1.0) {
        throw Error(ErrorKind::range, "noise_frac must lie in [0, 1]");
    }
    std::vector<Vec2> pts = gen_gaussian_2d(n, {0.0, 0.0}, cov, rng);
    if (noise.kind == NoiseKind::none || noise.noise_frac == 0.0) return pts;

    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = max_x;
    for (const Vec2& p : pts) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double wx = noise.noise_frac * (max_x - min_x);
    const double wy = noise.noise_frac * (max_y - min_y);

    const CounterRng nrng = rng.substream(kNoiseLane);
    for (std::size_t i = 0; i < n; ++i) {
        if (noise.kind == NoiseKind::uniform) {
            pts[i].x += nrng.uniform(2 * i, -wx, wx);
            pts[i].y += nrng.uniform(2 * i + 1, -wy, wy);
        } else {
            const double bx = noise_magnitude_icdf(nrng.uniform(4 * i));
            const double sx = nrng.uniform(4 * i + 1) < 0.5 ? -1.0 : 1.0;
            const double by = noise_magnitude_icdf(nrng.uniform(4 * i + 2));
            const double sy = nrng.uniform(4 * i + 3) < 0.5 ? -1.0 : 1.0;
            pts[i].x += wx * sx * bx;
            pts[i].y += wy * sy * by;
        }
    }
    return pts;
}

namespace {

std::vector<double> draw_mode(const ModeSpec& m, const CounterRng& rng) {
    if (m.count < 1) throw Error(ErrorKind::range, "mode count must be >= 1");
    std::vector<double> out(m.count);
    if (m.dist == ModeSpec::Dist::gaussian) {
        if (!(m.b > 0.0)) throw Error(ErrorKind::range, "mode sigma must be > 0");
        for (std::size_t i = 0; i < m.count; ++i) out[i] = m.a + m.b * rng.normal(i);
    } else {
        if (!(m.a < m.b)) throw Error(ErrorKind::range, "uniform mode needs lo < hi");
        for (std::size_t i = 0; i < m.count; ++i) out[i] = rng.uniform(i, m.a, m.b);
    }
    return out;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> gen_two_mode_1d(const ModeSpec& mode1,
                                                                    const ModeSpec& mode2,
                                                                    const CounterRng& rng) {
    return {draw_mode(mode1, rng.substream(1)), draw_mode(mode2, rng.substream(2))};
}

Scenario gen_lane_scenario(std::size_t index, double p_swerve, const LaneGenConfig& cfg,
                           const CounterRng& rng) {
    if (p_swerve < 0.0 || p_swerve > 1.0) throw Error(ErrorKind::range, "p_swerve outside [0, 1]");
    const CounterRng sr = rng.substream(index);
    const bool swerve = sr.uniform(0) < p_swerve;
    const double t0 = sr.uniform(1, cfg.swerve_window_lo, cfg.swerve_window_hi);

    const std::size_t n = static_cast<std::size_t>(std::lround(cfg.duration * cfg.sample_rate)) + 1;
    std::vector<Vec2> pos(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = static_cast<double>(j) / cfg.sample_rate;
        double y = cfg.jitter_sigma * sr.normal(2 + j);
        if (swerve) {
            const double u = std::clamp((t - t0) / cfg.ramp_seconds, 0.0, 1.0);
            y += cfg.lane_width * u * u * (3.0 - 2.0 * u);  // smoothstep ramp
        }
        pos[j] = {cfg.speed * t, y};
    }

    Scenario s;
    s.trajectory = Trajectory(std::move(pos), cfg.sample_rate);
    s.context = EnvironmentContext{{cfg.speed, 0.0}};
    s.mode_label = swerve ? 1 : 0;
    s.id = ScenarioId{"lane-gen", index};
    return s;
}

Dataset gen_lane_trajectories(std::size_t n, double p_swerve, double sample_rate,
                              const CounterRng& rng, const LaneGenConfig& base) {
    LaneGenConfig cfg = base;
    cfg.sample_rate = sample_rate;
    Dataset out;
    out.scenarios.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.scenarios.push_back(gen_lane_scenario(i, p_swerve, cfg, rng));
    }
    return out;
}

}  // namespace tailcal

#include "tailcal/calibration.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "tailcal/error.hpp"

namespace tailcal {

DeltaGrid DeltaGrid::default_grid() {
    DeltaGrid g;
    for (int k = 2; k <= 16; ++k) g.deltas.push_back(std::pow(10.0, -0.5 * k));
    return g;
}

void DeltaGrid::validate() const {
    if (deltas.empty()) throw Error(ErrorKind::range, "empty delta grid");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0 && deltas[i] < 1.0)) {
            throw Error(ErrorKind::range, "grid deltas must lie in (0, 1)");
        }
        if (i > 0 && !(deltas[i] < deltas[i - 1])) {
            throw Error(ErrorKind::range, "grid deltas must be strictly decreasing");
        }
    }
}

namespace {

// Per-grid violation test, specialized per model class so the per-action
// work is a scalar statistic plus comparisons.
class GridEval {
  public:
    GridEval(const FittedModel& model, std::span<const double> deltas) : model_(&model) {
        switch (model.cls) {
            case ModelClass::gaussian:
            case ModelClass::noisy_rational: {
                for (double d : deltas) {
                    const double r = gaussian_region_radius(model.gaussian, d);
                    thr_.push_back(r * r);
                }
                if (model.gaussian.dimension() == 2) {
                    const Eigen::Matrix2d c2 = model.gaussian.cov();
                    const Eigen::Matrix2d ic = c2.inverse();
                    ia_ = ic(0, 0);
                    ib_ = ic(0, 1);
                    ic_ = ic(1, 1);
                    mx_ = model.gaussian.mean()(0);
                    my_ = model.gaussian.mean()(1);
                    fast2d_ = true;
                }
                break;
            }
            case ModelClass::gmm:
                for (double d : deltas) thr_.push_back(-model.gmm_thresholds[model.cached_index(d)]);
                break;
            case ModelClass::quantile_tube:
                for (double d : deltas) tubes_.push_back(&model.tubes[model.cached_index(d)]);
                break;
            case ModelClass::scenario_hull:
                break;
            case ModelClass::two_mode:
                throw Error(ErrorKind::unsupported, "two_mode has no delta region");
        }
        g_ = deltas.size();
    }

    // Adds this action's violations to `counts` (one slot per grid delta).
    void tally(std::span<const Vec2> window, std::vector<std::size_t>& counts) const {
        switch (model_->cls) {
            case ModelClass::gaussian:
            case ModelClass::noisy_rational:
            case ModelClass::gmm: {
                const double s = severity(window);
                for (std::size_t i = 0; i < g_; ++i) {
                    if (s > thr_[i]) ++counts[i];
                }
                return;
            }
            case ModelClass::quantile_tube: {
                // tubes grow along the grid; stop at the first that contains
                for (std::size_t i = 0; i < g_; ++i) {
                    if (tubes_[i]->contains(window)) return;
                    ++counts[i];
                }
                return;
            }
            case ModelClass::scenario_hull: {
                if (model_->hull.contains(window)) return;
                for (std::size_t i = 0; i < g_; ++i) ++counts[i];
                return;
            }
            case ModelClass::two_mode: return;  // rejected in the constructor
        }
    }

  private:
    double severity(std::span<const Vec2> window) const {
        if (model_->cls == ModelClass::gmm) {
            double mn = std::numeric_limits<double>::infinity();
            for (const Vec2& p : window) mn = std::min(mn, model_->gmm.density(p));
            return -mn;
        }
        double mx = -std::numeric_limits<double>::infinity();
        if (fast2d_) {
            for (const Vec2& p : window) {
                const double dx = p.x - mx_;
                const double dy = p.y - my_;
                mx = std::max(mx, ia_ * dx * dx + 2.0 * ib_ * dx * dy + ic_ * dy * dy);
            }
        } else {
            for (const Vec2& p : window) mx = std::max(mx, model_->gaussian.mahalanobis2(p));
        }
        return mx;
    }

    const FittedModel* model_;
    std::size_t g_ = 0;
    std::vector<double> thr_;
    std::vector<const QuantileTube*> tubes_;
    bool fast2d_ = false;
    double ia_ = 0.0, ib_ = 0.0, ic_ = 0.0, mx_ = 0.0, my_ = 0.0;
};

std::vector<std::size_t> count_over(const FittedModel& model, const ActionSet& test,
                                    std::span<const double> deltas, int threads) {
    if (test.n == 0) throw Error(ErrorKind::size, "empty test set");
    const GridEval eval(model, deltas);
    const std::size_t g = deltas.size();
    const std::size_t shards = static_cast<std::size_t>(std::max(threads, 1));
    std::vector<std::vector<std::size_t>> local(shards, std::vector<std::size_t>(g, 0));
    auto work = [&](std::size_t shard) {
        const std::size_t lo = test.n * shard / shards;
        const std::size_t hi = test.n * (shard + 1) / shards;
        auto& counts = local[shard];
        for (std::size_t a = lo; a < hi; ++a) {
            const std::span<const Vec2> window(test.pts.data() + a * test.timesteps,
                                               test.timesteps);
            eval.tally(window, counts);
        }
    };
    if (shards == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t s = 0; s < shards; ++s) pool.emplace_back(work, s);
        for (auto& t : pool) t.join();
    }
    std::vector<std::size_t> counts(g, 0);
    for (const auto& l : local) {
        for (std::size_t i = 0; i < g; ++i) counts[i] += l[i];
    }
    return counts;
}

}  // namespace

std::size_t count_violations(const FittedModel& model, const ActionSet& test, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in (0, 1)");
    const double deltas[1] = {delta};
    return count_over(model, test, deltas, 1)[0];
}

std::size_t count_violations(const FittedModel& model, std::span<const Trajectory> test,
                             double delta, double window) {
    return count_violations(model, ActionSet::from_actions(test, window), delta);
}

CalibrationCurve calibration_curve(const FittedModel& model, const ActionSet& test,
                                   const DeltaGrid& grid, int threads) {
    grid.validate();
    const std::vector<std::size_t> counts = count_over(model, test, grid.deltas, threads);
    CalibrationCurve curve;
    curve.n_test = test.n;
    for (std::size_t i = 0; i < grid.deltas.size(); ++i) {
        CurvePoint p;
        p.delta = grid.deltas[i];
        p.expected_count = p.delta * static_cast<double>(test.n);
        p.observed_count = counts[i];
        p.ratio = static_cast<double>(counts[i]) / p.expected_count;
        p.log10_ratio = counts[i] == 0 ? -std::numeric_limits<double>::infinity()
                                       : std::log10(p.ratio);
        curve.points.push_back(p);
    }
    return curve;
}

CalibrationCurve calibration_curve(const FittedModel& model, std::span<const Trajectory> test,
                                   const DeltaGrid& grid, double window, int threads) {
    return calibration_curve(model, ActionSet::from_actions(test, window), grid, threads);
}

DeltaMinResult delta_min(const CalibrationCurve& curve, double eta, bool monotone_prefix) {
    if (!(eta > 0.0)) throw Error(ErrorKind::range, "eta must be positive");
    DeltaMinResult res;
    res.eta = eta;
    for (const CurvePoint& p : curve.points) {
        res.accurate.push_back(p.observed_count >= 1 && std::abs(p.log10_ratio) <= eta);
    }
    if (monotone_prefix) {
        std::size_t len = 0;
        while (len < res.accurate.size() && res.accurate[len]) ++len;
        if (len > 0) res.delta_min = curve.points[len - 1].delta;
    } else {
        for (std::size_t i = curve.points.size(); i-- > 0;) {
            if (res.accurate[i]) {
                res.delta_min = curve.points[i].delta;
                break;
            }
        }
    }
    return res;
}

double ScalingFit::extrapolate(double delta_target) const {
    if (!(delta_target > 0.0)) throw Error(ErrorKind::range, "delta_target must be positive");
    if (slope == 0.0) throw Error(ErrorKind::degeneracy, "flat scaling fit cannot extrapolate");
    return std::pow(10.0, (std::log10(delta_target) - intercept) / slope);
}

ScalingFit scaling_fit(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw Error(ErrorKind::range, "need at least 3 scaling points");
    ScalingFit fit;
    fit.points.assign(points.begin(), points.end());
    double sx = 0.0, sy = 0.0;
    for (const auto& [n, d] : points) {
        if (!(n > 0.0) || !(d > 0.0)) throw Error(ErrorKind::range, "scaling points must be positive");
        sx += std::log10(n);
        sy += std::log10(d);
    }
    const double m = static_cast<double>(points.size());
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [n, d] : points) {
        const double dx = std::log10(n) - mx;
        const double dy = std::log10(d) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::degeneracy, "scaling points share one N");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (const auto& [n, d] : points) {
            const double e = std::log10(d) - (fit.intercept + fit.slope * std::log10(n));
            ss_res += e * e;
        }
        fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    } else {
        fit.r2 = 1.0;
    }
    return fit;
}

double vc_lower_bound(const VcBoundQuery& q) {
    if (!(q.delta > 0.0 && q.delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in (0, 1)");
    if (!(q.vcdim >= 1.0)) throw Error(ErrorKind::range, "vcdim must be >= 1");
    const double inv = 1.0 / q.delta;
    return q.c1 * inv * std::log(inv) + q.c2 * q.vcdim * inv;
}

}  // namespace tailcal

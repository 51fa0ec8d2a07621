#include "tailcal/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tailcal/error.hpp"

namespace tailcal {

GmmModel::GmmModel(std::vector<Component> components, EmDiagnostics diagnostics)
    : components_(std::move(components)), diagnostics_(std::move(diagnostics)) {
    if (components_.empty()) throw Error(ErrorKind::range, "mixture needs at least one component");
    double wsum = 0.0;
    for (const Component& c : components_) {
        if (!(c.weight > 0.0)) throw Error(ErrorKind::degeneracy, "non-positive mixture weight");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) {
        throw Error(ErrorKind::degeneracy, "mixture weights must sum to 1");
    }
}

double GmmModel::log_density(const Eigen::VectorXd& x) const {
    double mx = -std::numeric_limits<double>::infinity();
    double terms[64];
    const std::size_t k = components_.size();
    for (std::size_t c = 0; c < k; ++c) {
        terms[c] = std::log(components_[c].weight) + components_[c].gaussian.log_density(x);
        mx = std::max(mx, terms[c]);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(terms[c] - mx);
    return mx + std::log(s);
}

double GmmModel::log_density(Vec2 p) const {
    return log_density(Eigen::Vector2d(p.x, p.y));
}

double GmmModel::density(Vec2 p) const {
    return std::exp(log_density(p));
}

Vec2 GmmModel::sample2(std::uint64_t index, const CounterRng& rng) const {
    const double u = rng.substream(0xC0).uniform(index);
    double acc = 0.0;
    std::size_t pick = components_.size() - 1;
    for (std::size_t c = 0; c < components_.size(); ++c) {
        acc += components_[c].weight;
        if (u < acc) {
            pick = c;
            break;
        }
    }
    return components_[pick].gaussian.sample2(index, rng.substream(0xC1 + pick));
}

namespace {

Eigen::Matrix2d floor_cov(const Eigen::Matrix2d& cov, double floor, bool& floored) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::degeneracy, "covariance eigensolve failed");
    Eigen::Vector2d ev = es.eigenvalues();
    if (ev.minCoeff() >= floor) return cov;
    floored = true;
    ev = ev.cwiseMax(floor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

struct EmResult {
    std::vector<GmmModel::Component> components;
    EmDiagnostics diag;
    double ll = -std::numeric_limits<double>::infinity();
};

EmResult run_em(std::span<const Vec2> pts, std::size_t k, const EmConfig& cfg,
                const CounterRng& rng) {
    const std::size_t n = pts.size();

    // k-means++-style seeding
    std::vector<Vec2> means;
    means.push_back(pts[static_cast<std::size_t>(rng.uniform(0) * static_cast<double>(n))]);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = pts[i].x - means.back().x;
            const double dy = pts[i].y - means.back().y;
            d2[i] = std::min(d2[i], dx * dx + dy * dy);
            total += d2[i];
        }
        const double target = rng.uniform(c) * total;
        double acc = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= target) {
                pick = i;
                break;
            }
        }
        means.push_back(pts[pick]);
    }

    // shared initial covariance: global MLE covariance of the data
    Eigen::Vector2d gmean = Eigen::Vector2d::Zero();
    for (const Vec2& p : pts) gmean += Eigen::Vector2d(p.x, p.y);
    gmean /= static_cast<double>(n);
    Eigen::Matrix2d gcov = Eigen::Matrix2d::Zero();
    for (const Vec2& p : pts) {
        const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - gmean;
        gcov += d * d.transpose();
    }
    gcov /= static_cast<double>(n);
    bool floored = false;
    gcov = floor_cov(gcov, cfg.cov_floor, floored);

    std::vector<GmmModel::Component> comps(k);
    for (std::size_t c = 0; c < k; ++c) {
        comps[c].weight = 1.0 / static_cast<double>(k);
        comps[c].gaussian = GaussianModel(Eigen::Vector2d(means[c].x, means[c].y), gcov);
    }

    std::vector<double> resp(n * k);
    EmResult res;
    res.diag.log_likelihood_trace.reserve(64);
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool prev_floored = true;  // seeding counts as a reset

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        // E-step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double t = std::log(comps[c].weight) + comps[c].gaussian.log_density(pts[i]);
                resp[i * k + c] = t;
                mx = std::max(mx, t);
            }
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c) s += std::exp(resp[i * k + c] - mx);
            const double lse = mx + std::log(s);
            ll += lse;
            for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - lse);
        }
        if (!std::isfinite(ll)) throw Error(ErrorKind::degeneracy, "EM log-likelihood diverged");
        // monotone unless the previous M-step had to floor a covariance
        if (!prev_floored && ll < prev_ll - 1e-7 * (1.0 + std::abs(prev_ll))) {
            throw Error(ErrorKind::degeneracy, "EM log-likelihood decreased");
        }
        res.diag.log_likelihood_trace.push_back(ll);
        res.diag.iterations = iter + 1;
        res.ll = ll;
        const bool converged = iter > 0 && ll - prev_ll < cfg.tol;
        prev_ll = ll;
        if (converged) break;

        // M-step
        prev_floored = false;
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0;
            Eigen::Vector2d mu = Eigen::Vector2d::Zero();
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + c];
                mu += resp[i * k + c] * Eigen::Vector2d(pts[i].x, pts[i].y);
            }
            if (!(nk > 1e-10)) throw Error(ErrorKind::degeneracy, "mixture component collapsed");
            mu /= nk;
            Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
            for (std::size_t i = 0; i < n; ++i) {
                const Eigen::Vector2d d = Eigen::Vector2d(pts[i].x, pts[i].y) - mu;
                cov += resp[i * k + c] * (d * d.transpose());
            }
            cov /= nk;
            bool fl = false;
            cov = floor_cov(cov, cfg.cov_floor, fl);
            prev_floored = prev_floored || fl;
            comps[c].weight = nk / static_cast<double>(n);
            comps[c].gaussian = GaussianModel(mu, cov);
        }
        // renormalize against accumulated roundoff
        double wsum = 0.0;
        for (const auto& c : comps) wsum += c.weight;
        for (auto& c : comps) c.weight /= wsum;
    }

    res.components = std::move(comps);
    res.diag.final_log_likelihood = res.ll;
    return res;
}

}  // namespace

GmmModel fit_gmm(std::span<const Vec2> points, std::size_t k, const EmConfig& cfg,
                 const CounterRng& rng) {
    if (k < 1) throw Error(ErrorKind::range, "k must be >= 1");
    if (k > 64) throw Error(ErrorKind::range, "k too large");
    if (points.size() < k * 3) {
        throw Error(ErrorKind::size, "need at least k*(d+1) points to fit a mixture");
    }
    EmResult best;
    bool have = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        EmResult res = run_em(points, k, cfg, rng.substream(static_cast<std::uint64_t>(r)));
        if (!have || res.ll > best.ll) {
            best = std::move(res);
            have = true;
        }
        best.diag.restarts_run = r + 1;
    }
    return GmmModel(std::move(best.components), std::move(best.diag));
}

double gmm_density_threshold(const GmmModel& model, double delta, std::size_t mc_samples,
                             const CounterRng& rng) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in (0, 1)");
    if (mc_samples < 10'000) throw Error(ErrorKind::range, "mc_samples must be >= 10^4");
    const double idx_f = delta * static_cast<double>(mc_samples);
    if (idx_f < 10.0) {
        throw Error(ErrorKind::resolution, "delta * mc_samples < 10: quantile unreliable");
    }
    std::vector<double> dens(mc_samples);
    for (std::size_t i = 0; i < mc_samples; ++i) {
        dens[i] = model.density(model.sample2(i, rng));
    }
    const std::size_t idx = static_cast<std::size_t>(idx_f);
    std::nth_element(dens.begin(), dens.begin() + static_cast<std::ptrdiff_t>(idx), dens.end());
    return dens[idx];
}

}  // namespace tailcal

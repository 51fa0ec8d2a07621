#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "tailcal/gaussian.hpp"
#include "tailcal/rng.hpp"

namespace tailcal {

struct EmConfig {
    double tol = 1e-8;            // stop when log-likelihood gain drops below this
    int max_iterations = 500;
    int restarts = 10;
    double cov_floor = 1e-8;      // minimum covariance eigenvalue
};

struct EmDiagnostics {
    int iterations = 0;
    int restarts_run = 0;
    double final_log_likelihood = 0.0;
    std::vector<double> log_likelihood_trace;  // winning restart
};

class GmmModel {
  public:
    struct Component {
        double weight = 1.0;
        GaussianModel gaussian;
    };

    GmmModel() = default;
    GmmModel(std::vector<Component> components, EmDiagnostics diagnostics);

    const std::vector<Component>& components() const { return components_; }
    std::size_t component_count() const { return components_.size(); }
    const EmDiagnostics& diagnostics() const { return diagnostics_; }

    double log_density(const Eigen::VectorXd& x) const;
    double log_density(Vec2 p) const;
    double density(Vec2 p) const;

    // Mixture draw addressed by index (one component pick + one Gaussian draw).
    Vec2 sample2(std::uint64_t index, const CounterRng& rng) const;

  private:
    std::vector<Component> components_;
    EmDiagnostics diagnostics_;
};

GmmModel fit_gmm(std::span<const Vec2> points, std::size_t k, const EmConfig& cfg,
                 const CounterRng& rng);

// Density threshold t whose superlevel set {density >= t} carries model mass
// 1 - delta, estimated from mc_samples model draws.
double gmm_density_threshold(const GmmModel& model, double delta, std::size_t mc_samples,
                             const CounterRng& rng);

}  // namespace tailcal

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <span>
#include <vector>

#include "tailcal/geometry.hpp"
#include "tailcal/rng.hpp"

namespace tailcal {

// Multivariate normal with MLE-fitted parameters.
class GaussianModel {
  public:
    GaussianModel() = default;
    GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    Eigen::Index dimension() const { return mean_.size(); }

    double mahalanobis2(const Eigen::VectorXd& x) const;
    double mahalanobis2(Vec2 p) const;
    double log_density(const Eigen::VectorXd& x) const;
    double log_density(Vec2 p) const;

    // Draw addressed by index: uses normal draws at indices
    // [index*ceil(d/2), ...) of `rng`.
    Eigen::VectorXd sample(std::uint64_t index, const CounterRng& rng) const;
    Vec2 sample2(std::uint64_t index, const CounterRng& rng) const;

  private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_norm_ = 0.0;  // -(d/2) log(2 pi) - (1/2) log det
};

GaussianModel fit_gaussian(const Eigen::MatrixXd& points);  // rows are samples
GaussianModel fit_gaussian(std::span<const Vec2> points);
GaussianModel fit_gaussian(std::span<const double> points);  // 1D

// Identical fit; callers tag the result as the noisy-rational class, whose
// rationality temperature is absorbed into the covariance scale.
GaussianModel fit_noisy_rational(const Eigen::MatrixXd& points);
GaussianModel fit_noisy_rational(std::span<const Vec2> points);

// Mahalanobis radius r such that the ball {m2 <= r^2} has mass 1 - delta.
double gaussian_region_radius(const GaussianModel& model, double delta);
double gaussian_region_radius_dim(int dimension, double delta);

Eigen::MatrixXd to_matrix(std::span<const Vec2> points);

}  // namespace tailcal

#include "tailcal/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "tailcal/error.hpp"

namespace tailcal {

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
        throw Error(ErrorKind::matrix, "covariance shape does not match mean");
    }
    if (!mean_.allFinite() || !cov_.allFinite()) {
        throw Error(ErrorKind::matrix, "non-finite Gaussian parameters");
    }
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) {
        throw Error(ErrorKind::degeneracy, "covariance is not positive definite");
    }
    const Eigen::MatrixXd L = llt_.matrixL();
    double log_det = 0.0;
    double min_diag = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        log_det += 2.0 * std::log(L(i, i));
        min_diag = std::min(min_diag, L(i, i));
    }
    if (!(min_diag > 1e-154)) {
        throw Error(ErrorKind::degeneracy, "covariance is numerically singular");
    }
    log_norm_ = -0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) -
                0.5 * log_det;
}

double GaussianModel::mahalanobis2(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd d = x - mean_;
    return d.dot(llt_.solve(d));
}

double GaussianModel::mahalanobis2(Vec2 p) const {
    return mahalanobis2(Eigen::Vector2d(p.x, p.y));
}

double GaussianModel::log_density(const Eigen::VectorXd& x) const {
    return log_norm_ - 0.5 * mahalanobis2(x);
}

double GaussianModel::log_density(Vec2 p) const {
    return log_density(Eigen::Vector2d(p.x, p.y));
}

Eigen::VectorXd GaussianModel::sample(std::uint64_t index, const CounterRng& rng) const {
    const Eigen::Index d = dimension();
    const std::uint64_t pairs = (static_cast<std::uint64_t>(d) + 1) / 2;
    Eigen::VectorXd z(d);
    for (std::uint64_t j = 0; j < pairs; ++j) {
        double z0, z1;
        rng.normal_pair(index * pairs + j, z0, z1);
        z(static_cast<Eigen::Index>(2 * j)) = z0;
        if (static_cast<Eigen::Index>(2 * j + 1) < d) z(static_cast<Eigen::Index>(2 * j + 1)) = z1;
    }
    return mean_ + llt_.matrixL() * z;
}

Vec2 GaussianModel::sample2(std::uint64_t index, const CounterRng& rng) const {
    const Eigen::VectorXd v = sample(index, rng);
    return {v(0), v(1)};
}

GaussianModel fit_gaussian(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (n < d + 1) throw Error(ErrorKind::size, "need at least d+1 points for a Gaussian fit");
    const Eigen::VectorXd mean = points.colwise().mean();
    const Eigen::MatrixXd centered = points.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n);  // MLE, 1/n
    // reject rank-deficient sample covariance up front
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success ||
        es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw Error(ErrorKind::degeneracy, "sample covariance is singular (points in general position required)");
    }
    return GaussianModel(mean, cov);
}

Eigen::MatrixXd to_matrix(std::span<const Vec2> points) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = points[i].x;
        m(static_cast<Eigen::Index>(i), 1) = points[i].y;
    }
    return m;
}

GaussianModel fit_gaussian(std::span<const Vec2> points) {
    return fit_gaussian(to_matrix(points));
}

GaussianModel fit_gaussian(std::span<const double> points) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), 1);
    for (std::size_t i = 0; i < points.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = points[i];
    return fit_gaussian(m);
}

GaussianModel fit_noisy_rational(const Eigen::MatrixXd& points) {
    return fit_gaussian(points);
}

GaussianModel fit_noisy_rational(std::span<const Vec2> points) {
    return fit_gaussian(points);
}

double gaussian_region_radius_dim(int dimension, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in (0, 1)");
    if (dimension < 1) throw Error(ErrorKind::range, "dimension must be >= 1");
    if (dimension == 2) return std::sqrt(-2.0 * std::log(delta));  // exp(-r^2/2) = delta
    const boost::math::chi_squared dist(dimension);
    return std::sqrt(boost::math::quantile(boost::math::complement(dist, delta)));
}

double gaussian_region_radius(const GaussianModel& model, double delta) {
    return gaussian_region_radius_dim(static_cast<int>(model.dimension()), delta);
}

}  // namespace tailcal

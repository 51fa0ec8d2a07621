#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "tailcal/error.hpp"
#include "tailcal/gaussian.hpp"
#include "tailcal/generators.hpp"

using namespace tailcal;

TEST_CASE("fit_gaussian recovers the MLE on a hand-checked set") {
    // four points, moments computed by hand
    Eigen::MatrixXd pts(4, 2);
    pts << 0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0;
    const GaussianModel m = fit_gaussian(pts);
    CHECK(m.mean()(0) == doctest::Approx(1.0));
    CHECK(m.mean()(1) == doctest::Approx(1.0));
    CHECK(m.cov()(0, 0) == doctest::Approx(1.0));  // 1/n convention
    CHECK(m.cov()(1, 1) == doctest::Approx(1.0));
    CHECK(m.cov()(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("fit_gaussian domain errors") {
    Eigen::MatrixXd two(2, 2);
    two << 0.0, 0.0, 1.0, 1.0;
    CHECK_THROWS_AS(fit_gaussian(two), Error);  // n < d+1

    Eigen::MatrixXd collinear(5, 2);
    for (int i = 0; i < 5; ++i) collinear.row(i) << i, 2.0 * i;
    CHECK_THROWS_AS(fit_gaussian(collinear), Error);
}

TEST_CASE("model constructor validates the covariance") {
    const Eigen::Vector2d mu(0.0, 0.0);
    Eigen::Matrix2d bad;
    bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS_AS(GaussianModel(mu, bad), Error);
    CHECK_THROWS_AS(GaussianModel(mu, Eigen::Matrix2d::Zero()), Error);
    CHECK_THROWS_AS(GaussianModel(Eigen::Vector3d::Zero(), bad), Error);  // shape mismatch
}

TEST_CASE("mahalanobis distance matches the 2x2 closed form") {
    Eigen::Matrix2d cov;
    cov << 2.0, 0.5, 0.5, 1.0;
    const Eigen::Vector2d mu(1.0, -1.0);
    const GaussianModel m(mu, cov);
    const double det = 2.0 * 1.0 - 0.25;
    for (const Vec2 p : {Vec2{0.0, 0.0}, Vec2{3.0, 1.0}, Vec2{-2.0, 4.0}}) {
        const double dx = p.x - 1.0, dy = p.y + 1.0;
        const double want = (1.0 * dx * dx - 2.0 * 0.5 * dx * dy + 2.0 * dy * dy) / det;
        CHECK(m.mahalanobis2(p) == doctest::Approx(want).epsilon(1e-12));
    }
    // density normalizer against the explicit formula
    const Vec2 q{0.3, 0.7};
    const double want_log = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) -
                            0.5 * m.mahalanobis2(q);
    CHECK(m.log_density(q) == doctest::Approx(want_log).epsilon(1e-12));
}

TEST_CASE("sampling reproduces mean and covariance") {
    Eigen::Matrix2d cov;
    cov << 1.5, -0.4, -0.4, 0.8;
    const GaussianModel m(Eigen::Vector2d(2.0, -3.0), cov);
    const CounterRng rng(808, 1);
    const std::size_t n = 1'000'000;
    double sx = 0.0, sy = 0.0;
    std::vector<Vec2> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = m.sample2(i, rng);
        sx += pts[i].x;
        sy += pts[i].y;
    }
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (const Vec2& p : pts) {
        cxx += (p.x - mx) * (p.x - mx);
        cxy += (p.x - mx) * (p.y - my);
        cyy += (p.y - my) * (p.y - my);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double se = 5.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mx - 2.0) < se * std::sqrt(1.5));
    CHECK(std::abs(my + 3.0) < se * std::sqrt(0.8));
    CHECK(cxx * inv_n == doctest::Approx(1.5).epsilon(0.01));
    CHECK(cxy * inv_n == doctest::Approx(-0.4).epsilon(0.05));
    CHECK(cyy * inv_n == doctest::Approx(0.8).epsilon(0.01));
    // deterministic replay
    CHECK(m.sample2(17, rng) == m.sample2(17, CounterRng(808, 1)));
}

TEST_CASE("2D region radius closed form") {
    for (int k = 2; k <= 16; ++k) {
        const double delta = std::pow(10.0, -0.5 * k);
        const double r = gaussian_region_radius_dim(2, delta);
        CHECK(std::abs(r - std::sqrt(-2.0 * std::log(delta))) <= 1e-10 * r);
    }
    // radius is antitone in delta and vanishes as delta -> 1
    CHECK(gaussian_region_radius_dim(2, 1e-4) > gaussian_region_radius_dim(2, 1e-2));
    CHECK(gaussian_region_radius_dim(2, 0.9999) < 0.02);
    CHECK_THROWS_AS(gaussian_region_radius_dim(2, 0.0), Error);
    CHECK_THROWS_AS(gaussian_region_radius_dim(2, 1.0), Error);
    CHECK_THROWS_AS(gaussian_region_radius_dim(0, 0.5), Error);
}

TEST_CASE("1D five-sigma tail matches the erfc oracle") {
    const double delta5 = std::erfc(5.0 / std::sqrt(2.0));  // two-sided tail at r=5
    CHECK(delta5 == doctest::Approx(5.733e-7).epsilon(1e-3));
    const double r = gaussian_region_radius_dim(1, delta5);
    CHECK(std::abs(r - 5.0) < 1e-3 * 5.0);
    // round trip at a few more radii
    for (double want : {1.0, 2.5, 4.0}) {
        const double d = std::erfc(want / std::sqrt(2.0));
        CHECK(gaussian_region_radius_dim(1, d) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("empirical region mass converges to 1 - delta") {
    const CounterRng gen_rng(909, 1);
    const auto train = gen_gaussian_2d(10'000, {0.0, 0.0}, Cov2{1.3, 0.2, 0.9}, gen_rng);
    const GaussianModel m = fit_gaussian(train);
    const CounterRng mc_rng(909, 2);
    const std::size_t n = 1'000'000;
    std::vector<double> m2(n);
    for (std::size_t i = 0; i < n; ++i) m2[i] = m.mahalanobis2(m.sample2(i, mc_rng));
    for (double delta : {0.1, 0.01, 1e-3}) {
        const double r = gaussian_region_radius(m, delta);
        std::size_t inside = 0;
        for (double v : m2) {
            if (v <= r * r) ++inside;
        }
        const double frac = static_cast<double>(inside) / static_cast<double>(n);
        const double tol = 4.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(n));
        CHECK(std::abs(frac - (1.0 - delta)) < tol);
    }
}

TEST_CASE("noisy rational fit equals the gaussian fit") {
    const auto pts = gen_gaussian_2d(5000, {1.0, 2.0}, Cov2{}, CounterRng(909, 3));
    const GaussianModel a = fit_gaussian(pts);
    const GaussianModel b = fit_noisy_rational(pts);
    CHECK(a.mean() == b.mean());
    CHECK(a.cov() == b.cov());
}

TEST_CASE("1D span overload fits a scalar gaussian") {
    const std::vector<double> xs{-1.0, 0.0, 1.0, 2.0};
    const GaussianModel m = fit_gaussian(std::span<const double>(xs));
    CHECK(m.dimension() == 1);
    CHECK(m.mean()(0) == doctest::Approx(0.5));
    CHECK(m.cov()(0, 0) == doctest::Approx(1.25));  // 1/n variance
}

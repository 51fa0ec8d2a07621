#include "tailcal/two_mode.hpp"

#include <cmath>

#include "tailcal/error.hpp"

namespace tailcal {

namespace {

void fit_mode(std::span<const double> pts, double& mu, double& sigma) {
    if (pts.size() < 2) throw Error(ErrorKind::degeneracy, "need at least 2 points per mode");
    double m = 0.0;
    for (double x : pts) m += x;
    m /= static_cast<double>(pts.size());
    double v = 0.0;
    for (double x : pts) v += (x - m) * (x - m);
    v /= static_cast<double>(pts.size());  // MLE, 1/n
    if (!(v > 0.0)) throw Error(ErrorKind::degeneracy, "mode has zero variance");
    mu = m;
    sigma = std::sqrt(v);
}

}  // namespace

TwoModeClassifier fit_two_mode_classifier(std::span<const double> points1,
                                          std::span<const double> points2) {
    TwoModeClassifier c;
    fit_mode(points1, c.mu1, c.sigma1);
    fit_mode(points2, c.mu2, c.sigma2);
    return c;
}

double mode_log_odds(const TwoModeClassifier& c, double x) {
    const double d1 = (x - c.mu1) / c.sigma1;
    const double d2 = (x - c.mu2) / c.sigma2;
    return std::log(c.sigma1) - std::log(c.sigma2) + 0.5 * (d1 * d1 - d2 * d2);
}

void mode_posterior(const TwoModeClassifier& c, double x, double& p1, double& p2) {
    const double l = mode_log_odds(c, x);
    p2 = 1.0 / (1.0 + std::exp(-l));
    p1 = 1.0 / (1.0 + std::exp(l));
}

namespace {

// 1: p1 >= 1-delta, 2: p2 >= 1-delta, 0: gray. `tau` = log(delta/(1-delta)).
int label_at(const TwoModeClassifier& c, double tau, double x) {
    const double l = mode_log_odds(c, x);
    if (l <= tau) return 1;
    if (-l <= tau) return 2;
    return 0;
}

// Boundary between differently labeled samples a < b, refined on the
// posterior threshold the left label crosses.
double refine(const TwoModeClassifier& c, double tau, double a, double b, int label_a) {
    auto leaving = [&](double x) { return label_at(c, tau, x) == label_a; };
    while (b - a > 1e-9) {
        const double mid = 0.5 * (a + b);
        (leaving(mid) ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

}  // namespace

DecisionIntervals decision_intervals(const TwoModeClassifier& c, double delta, double lo, double hi,
                                     std::size_t grid) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in (0, 1)");
    if (!(lo < hi)) throw Error(ErrorKind::range, "need lo < hi");
    if (grid < 1000) throw Error(ErrorKind::range, "grid must be >= 10^3");
    const double tau = std::log(delta) - std::log1p(-delta);

    DecisionIntervals out;
    auto emit = [&](int label, double a, double b) {
        auto& set = label == 1 ? out.mode1 : label == 2 ? out.mode2 : out.gray;
        set.push_back({a, b});
    };
    const double step = (hi - lo) / static_cast<double>(grid);
    double seg_start = lo;
    int seg_label = label_at(c, tau, lo);
    double prev_x = lo;
    for (std::size_t i = 1; i <= grid; ++i) {
        const double x = (i == grid) ? hi : lo + static_cast<double>(i) * step;
        const int l = label_at(c, tau, x);
        if (l != seg_label) {
            const double b = refine(c, tau, prev_x, x, seg_label);
            emit(seg_label, seg_start, b);
            seg_start = b;
            seg_label = l;
        }
        prev_x = x;
    }
    emit(seg_label, seg_start, hi);
    return out;
}

}  // namespace tailcal

#pragma once

#include <span>
#include <vector>

namespace tailcal {

// Two 1D Gaussian modes with a uniform prior (static Bayes classification).
struct TwoModeClassifier {
    double mu1 = 0.0, sigma1 = 1.0;
    double mu2 = 0.0, sigma2 = 1.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// One label per maximal interval: mode 1, mode 2, or gray (neither posterior
// reaches 1 - delta).
struct DecisionIntervals {
    std::vector<Interval> mode1;
    std::vector<Interval> mode2;
    std::vector<Interval> gray;
};

TwoModeClassifier fit_two_mode_classifier(std::span<const double> points1,
                                          std::span<const double> points2);

// (p1, p2) with p_i proportional to the mode-i density at x.
void mode_posterior(const TwoModeClassifier& c, double x, double& p1, double& p2);

// Log posterior odds for mode 2 over mode 1.
double mode_log_odds(const TwoModeClassifier& c, double x);

DecisionIntervals decision_intervals(const TwoModeClassifier& c, double delta, double lo, double hi,
                                     std::size_t grid);

}  // namespace tailcal

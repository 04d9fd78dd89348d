#pragma once

#include <vector>

namespace bifurc {

/// Least-squares slope of log|quantity| against log ε.
struct RateFit {
    std::vector<double> eps_values;
    std::vector<double> quantity_values;
    double fitted_slope = 0.0;
    double fit_residual = 0.0;  ///< root-mean-square residual of the log fit
    int points_used = 0;
};

/// Fits on the last `tail` samples (all when tail ≤ 0). Throws
/// rates.InsufficientPoints with fewer than two usable samples or fewer than
/// `min_samples` in total.
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& quantity, int tail = 4,
                 int min_samples = 2);

/// Geometric grid start·ratio^k, k = 0..count−1.
std::vector<double> geometric_grid(double start, double ratio, int count);

}  // namespace bifurc

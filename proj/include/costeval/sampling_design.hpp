#pragma once

// Variance-optimal input sampling distribution over a discrete stratification.

#include <span>
#include <string>
#include <vector>

namespace costeval {

struct InputDesign {
    std::vector<double> base;    // P(x)
    std::vector<double> nu;      // per-stratum second moment of the increment
    std::vector<double> q_star;  // optimal sampling probabilities
};

/// nu(x) = E[H^2 | x] + (1/pi(x) - 1) u(x).
double nu_of_x(double pi_x, double second_moment_h, double u_x);

/// Q*(x) = P(x) sqrt(nu(x)) / E_P[sqrt(nu(X))].
InputDesign optimal_input_distribution(std::span<const double> base, std::span<const double> nu);

/// Per-step variance of the likelihood-ratio weighted increment under sampling law q:
/// sum_x P(x)^2 nu(x) / q(x) - theta^2.
double reweighted_increment_variance(std::span<const double> base, std::span<const double> nu,
                                     std::span<const double> q, double theta);

}  // namespace costeval

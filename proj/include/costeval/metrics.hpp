#pragma once

// Comparison metrics: analytic error ratio, Monte Carlo MSE with bootstrap
// intervals, effective budget and cost savings.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "costeval/core.hpp"
#include "costeval/policies.hpp"

namespace costeval {

/// Budget-free ratio of cost-adjusted error constants. Base enters with cost
/// factor c_h alone (its weak-rater charge is disregarded).
double error_ratio(const Policy& p1, const Policy& p2, const PolicyParams& params);

double mse_over_trials(std::span<const double> estimates, double theta_star);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Percentile bootstrap interval for the MSE, resampling whole trials.
Interval bootstrap_ci(std::span<const double> estimates, double theta_star, Rng& rng, double level = 0.95,
                      std::size_t resamples = 2000);

struct CurvePoint {
    double budget = 0.0;
    double mse = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct BudgetCurve {
    std::string policy;
    std::vector<CurvePoint> points;

    void validate() const;
};

struct BudgetLookup {
    double budget = 0.0;
    bool saturated = false;  // target outside the curve's MSE range
};

/// Budget at which the curve reaches `mse_target`, interpolating linearly in
/// (log B, log MSE) after an isotonic (non-increasing) cleanup of the MSEs.
BudgetLookup budget_for_mse(const BudgetCurve& curve, double mse_target);

/// Budget the base policy needs to reach `mse_target`.
BudgetLookup effective_budget(const BudgetCurve& curve_base, double mse_target);

/// B_base(mse_target) - B_pi(mse_target).
double cost_savings(const BudgetCurve& curve_pi, const BudgetCurve& curve_base, double mse_target);

/// Non-increasing least-squares fit (pool adjacent violators).
std::vector<double> isotonic_nonincreasing(std::span<const double> values);

}  // namespace costeval

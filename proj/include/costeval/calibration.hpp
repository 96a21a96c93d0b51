#pragma once

// Policy parameter estimation (burn-in and transfer), Platt scaling of the
// weak rater, power tuning and inverse-variance combination.

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "costeval/core.hpp"
#include "costeval/policies.hpp"

namespace costeval {

/// Calibrated score sigmoid(a * logit(g) + b).
struct PlattModel {
    double a = 1.0;
    double b = 0.0;

    double operator()(double g) const;

    nlohmann::json to_json() const { return {{"a", a}, {"b", b}}; }
    static PlattModel from_json(const nlohmann::json& j) {
        return {j.at("a").get<double>(), j.at("b").get<double>()};
    }
};

struct LabeledScore {
    double g = 0.0;
    double h = 0.0;  // 0 or 1
};

/// Maximum-likelihood Platt fit by damped Newton iterations.
PlattModel platt_fit(std::span<const LabeledScore> pairs);

/// True when every h is 0/1 and every g is in [0, 1].
bool supports_platt(std::span<const Sample> samples);

/// Maps incoming samples onto the calibrated weak rater.
///
/// With a Platt model, g is replaced by its calibrated value and u_hat by g(1 - g),
/// since a supplied uncertainty describes the raw score, not the calibrated one.
struct SampleCalibration {
    std::optional<PlattModel> platt;

    Sample apply(Sample s) const;
};

/// Parameters fitted on a fully annotated block.
struct FittedParams {
    PolicyParams params;
    SampleCalibration calibration;
};

/// Shared by burn-in and transfer: Platt when applicable, then Var(H), MSE and the U sample.
FittedParams fit_policy_inputs(std::span<const Sample> annotated, const RaterCosts& costs);

struct BurnInEstimate {
    std::size_t n_b = 0;
    double theta_burn = 0.0;
    double var_burn = 0.0;
    PolicyParams params;
    SampleCalibration calibration;
};

BurnInEstimate estimate_params_burnin(std::span<const Sample> burn, const RaterCosts& costs);

/// Plug-in variance of the policy estimate after `steps` steps, all from burn-in quantities.
double policy_estimate_variance(const PolicyParams& params, const Policy& policy, double steps);

/// (var2 * theta1 + var1 * theta2) / (var1 + var2).
double inverse_variance_combine(double theta1, double var1, double theta2, double var2);

/// Plug-in lambda for power tuning; nullopt when no record has pi < 1.
std::optional<double> power_tune_lambda(std::span<const TrialRecord> records);

/// Mean of lambda*g + (h - lambda*g) * xi / pi over the records.
double power_tuned_estimate(std::span<const TrialRecord> records, double lambda);

}  // namespace costeval

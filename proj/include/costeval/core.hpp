#pragma once

// Sequential inverse-propensity-weighted estimator of E[H] with a budgeted
// stopping rule, plus the closed-form error and cost functionals.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

namespace costeval {

using Rng = std::mt19937_64;

/// Lower bound applied to every annotation probability.
inline constexpr double kMinProbability = 1e-6;

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Cost per weak-rater (g) query and per strong-rater (h) query.
class RaterCosts {
  public:
    RaterCosts(double weak, double strong);

    double weak() const noexcept { return weak_; }
    double strong() const noexcept { return strong_; }
    double ratio() const noexcept { return weak_ / strong_; }

  private:
    double weak_;
    double strong_;
};

struct Sample {
    std::uint64_t x_id = 0;
    double g = 0.0;
    std::optional<double> h;
    double u_hat = 0.0;
};

struct TrialRecord {
    Sample sample;  // sample.h is set only when the strong rater was queried
    double pi_x = 1.0;
    bool xi = false;
    double delta = 0.0;
    double cumulative_cost = 0.0;
};

/// Running state of one budgeted trial.
class EstimatorState {
  public:
    EstimatorState(RaterCosts costs, double budget);

    /// True if another weak-rater query fits in the budget.
    bool can_afford_step() const noexcept;
    /// Charges c_g, and c_h when `queried_strong`; the strong charge is never refused.
    void charge(bool queried_strong);
    void add_increment(double delta);

    std::uint64_t steps() const noexcept { return t_; }
    double spent() const noexcept { return spent_; }
    double budget() const noexcept { return budget_; }
    double estimate() const;

  private:
    RaterCosts costs_;
    double budget_;
    std::uint64_t t_ = 0;
    double sum_delta_ = 0.0;
    double spent_ = 0.0;
};

/// g + (h - g) * xi / pi_x.
double active_increment(double g, std::optional<double> h, bool xi, double pi_x);

/// Per-step variance of the increment under a fixed policy:
/// Var(H) - E[(H-G)^2] + E[(H-G)^2 / pi(X)].
double increment_variance(double var_h, double mse, double mean_u_over_pi);

/// Mean squared error after `steps` steps (real-valued).
double error_of_policy(double var_h, double mse, double mean_u_over_pi, double steps);

/// Expected cost of `steps` steps at mean annotation rate `mean_pi`.
double cost_of_policy(const RaterCosts& costs, double mean_pi, double steps);

/// Real-valued stopping time B / (c_h E[pi] + c_g).
double stopping_time(const RaterCosts& costs, double mean_pi, double budget);

/// Pull-based stream of samples. Returns nullopt when exhausted.
using SampleSource = std::function<std::optional<Sample>(Rng&)>;
/// Annotation probability for a sample; may inspect sample.h (oracle policies).
using ProbabilityFn = std::function<double(const Sample&)>;

struct TrialResult {
    double estimate = 0.0;
    double spent = 0.0;
    std::uint64_t steps = 0;
    std::vector<TrialRecord> records;
};

/// Runs the sequential estimator until the next weak query would exceed the budget.
TrialResult run_trial(const SampleSource& source, const ProbabilityFn& probability,
                      const RaterCosts& costs, double budget, Rng& rng, bool keep_records = true);

/// Deterministic horizon floor(B / (c_h E[pi] + c_g)), at least one step.
std::uint64_t horizon_steps(const RaterCosts& costs, double mean_pi, double budget);

/// Runs exactly `steps` steps. The stopping time does not depend on the xi draws,
/// so the estimate is exactly unbiased; the realized spend is random with mean
/// steps * (c_h E[pi] + c_g).
TrialResult run_trial_steps(const SampleSource& source, const ProbabilityFn& probability,
                            const RaterCosts& costs, std::uint64_t steps, Rng& rng, bool keep_records = true);

/// Independent stream for trial `index` under a master seed.
Rng trial_rng(std::uint64_t seed, std::uint64_t index);
Rng trial_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// CSV: t,x_id,g,h,xi,pi_x,delta,cumulative_cost (h empty when not queried).
void write_trace_csv(std::ostream& out, const std::vector<TrialRecord>& records);

}  // namespace costeval

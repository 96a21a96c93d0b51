#pragma once

// Cost-optimal annotation policies: fixed-rate, integer-time fixed-rate,
// and the clipped active policy with its threshold search.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "costeval/core.hpp"

namespace costeval {

/// Discrete law of the conditional squared error U = u(X).
///
/// Atoms are kept sorted by value with normalized weights. Empirical samples
/// become equally weighted atoms; quadrature nodes and analytic point masses
/// use explicit weights.
class UncertaintyLaw {
  public:
    UncertaintyLaw() = default;

    static UncertaintyLaw from_sample(std::span<const double> u);
    static UncertaintyLaw from_weighted(std::span<const double> u, std::span<const double> weights);
    static UncertaintyLaw point_mass(double u);

    std::size_t size() const noexcept { return u_.size(); }
    bool empty() const noexcept { return u_.empty(); }
    const std::vector<double>& values() const noexcept { return u_; }
    const std::vector<double>& weights() const noexcept { return w_; }
    const std::vector<double>& roots() const noexcept { return s_; }

    double mean() const noexcept { return total_wu_; }
    double variance() const;

    /// P(sqrt(U) > tau).
    double tail_mass(double tau) const;
    /// E[U 1{sqrt(U) <= tau}].
    double head_moment(double tau) const;

    /// E[f(U)].
    template <class F>
    double expect(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < u_.size(); ++i) acc += w_[i] * f(u_[i]);
        return acc;
    }

    // Sums of w, w*s and w*u over atoms [0, i).
    double prefix_weight(std::size_t i) const { return cw_[i]; }
    double prefix_ws(std::size_t i) const { return cws_[i]; }
    double prefix_wu(std::size_t i) const { return cwu_[i]; }
    /// Number of atoms with sqrt(u) <= s.
    std::size_t count_at_most(double s) const;
    /// Number of atoms with sqrt(u) < s.
    std::size_t count_below(double s) const;

  private:
    void finalize();

    std::vector<double> u_, w_, s_;
    std::vector<double> cw_, cws_, cwu_;
    double total_wu_ = 0.0;
};

/// Distributional inputs every policy is built from.
struct PolicyParams {
    double var_h = 0.0;
    double mse = 0.0;
    UncertaintyLaw u;
    RaterCosts costs{1.0, 2.0};
    /// Set when `u` holds realized (h - g)^2 values; required for the oracle policy.
    bool realized_errors = false;

    void validate() const;
};

enum class PolicyKind { Base, Random, Active, Oracle };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

class Policy {
  public:
    static Policy base();
    static Policy random(double rate);
    static Policy active(double gamma, double tau);
    /// Active policy evaluated on the realized (h - g)^2 of each sample.
    static Policy oracle(double gamma, double tau);

    PolicyKind kind() const noexcept { return kind_; }
    double rate() const noexcept { return rate_; }
    double gamma() const noexcept { return gamma_; }
    double tau() const noexcept { return tau_; }
    double min_probability() const noexcept { return kMinProbability; }

    /// pi as a function of the uncertainty value u, clamped to [p_min, 1].
    double probability_for_u(double u) const;
    /// pi(x); reads sample.u_hat, or (h - g)^2 for the oracle.
    double probability(const Sample& sample) const;

    nlohmann::json to_json() const;
    static Policy from_json(const nlohmann::json& j);

  private:
    PolicyKind kind_ = PolicyKind::Base;
    double rate_ = 1.0;
    double gamma_ = 0.0;
    double tau_ = 0.0;
};

/// E[pi(U)] and E[U / pi(U)] under the law.
struct PolicyMoments {
    double mean_pi = 1.0;
    double mean_u_over_pi = 0.0;
};

PolicyMoments policy_moments(const Policy& policy, const UncertaintyLaw& law);

/// Budget-free objective (c_h E[pi] + c_g)(Var(H) - E[U] + E[U / pi]).
double budget_objective(const Policy& policy, const PolicyParams& params);

/// Mean squared error after `steps` steps of the given policy.
double error_of_policy(const PolicyParams& params, const Policy& policy, double steps);

/// Optimal fixed annotation rate with a real-valued stopping time.
double optimal_random_rate(const PolicyParams& params);

/// Optimal fixed annotation rate when the stopping time must be an integer.
double optimal_random_rate_integer(const PolicyParams& params, double budget);

/// Objective of the integer-time problem for a fixed rate: Var(Delta) / floor(B / (c_h p + c_g)).
double integer_time_error(const PolicyParams& params, double rate, double budget);

/// Scaling factor of the clipped active policy at threshold tau.
double gamma_star(double tau, const PolicyParams& params);

struct TauChoice {
    double tau = 0.0;
    double gamma = 0.0;
    double objective = 0.0;
};

/// Active-policy objective J(tau) using gamma_star(tau).
double tau_objective(double tau, const PolicyParams& params);

/// Grid search over tau; ties go to the smallest tau.
TauChoice optimize_tau(const PolicyParams& params, std::span<const double> grid);

/// Threshold candidates derived from the law of sqrt(U).
std::vector<double> default_tau_grid(const UncertaintyLaw& law);

Policy make_policy(PolicyKind kind, const PolicyParams& params,
                   std::optional<std::vector<double>> tau_grid = std::nullopt);

}  // namespace costeval

#pragma once

// Controlled generators with independently tunable Var(H), MSE(H, G) and Var(U).

#include <variant>

#include "costeval/core.hpp"
#include "costeval/policies.hpp"

namespace costeval {

/// H ~ N(0, nu), U ~ Gamma(mean mu, variance eta), G = H + sqrt(U).
struct GaussianSpec {
    double nu = 1.0;
    double mu = 0.2;
    double eta = 0.2;

    void validate() const;
};

/// H ~ Bern(0.5 + sqrt(0.25 - nu)), U ~ Beta(mean mu, variance eta), G = H flipped w.p. U.
struct BernoulliSpec {
    double nu = 0.25;
    double mu = 0.2;
    double eta = 0.1;

    void validate() const;
    double positive_rate() const;
};

using SyntheticSpec = std::variant<GaussianSpec, BernoulliSpec>;

/// One draw; u_hat carries the true U and h is always filled.
Sample gaussian_draw(const GaussianSpec& spec, Rng& rng);
Sample bernoulli_draw(const BernoulliSpec& spec, Rng& rng);
Sample synthetic_draw(const SyntheticSpec& spec, Rng& rng);

/// Infinite source; x_id counts draws.
SampleSource synthetic_source(SyntheticSpec spec);

/// Exact Var(H) and MSE with a 10,001-node inverse-CDF quadrature of U.
PolicyParams analytic_params(const SyntheticSpec& spec, const RaterCosts& costs);

/// Parameters whose law is that of the realized (H - G)^2, for the oracle policy.
PolicyParams oracle_params(const SyntheticSpec& spec, const RaterCosts& costs);

/// Bernoulli limit with U in {0, 1}: P(U = 1) = mu.
PolicyParams bernoulli_max_variance_params(double nu, double mu, const RaterCosts& costs);

/// E[H] of the generator.
double synthetic_mean(const SyntheticSpec& spec);

}  // namespace costeval

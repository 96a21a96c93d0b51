#include "costeval/synthetic.hpp"

#include <cmath>
#include <memory>
#include <random>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>

namespace costeval {

namespace {

constexpr std::size_t kQuadratureNodes = 10001;

template <class Distribution>
UncertaintyLaw quadrature_law(const Distribution& dist) {
    std::vector<double> nodes(kQuadratureNodes);
    for (std::size_t i = 0; i < kQuadratureNodes; ++i) {
        const double level = (static_cast<double>(i) + 0.5) / static_cast<double>(kQuadratureNodes);
        nodes[i] = boost::math::quantile(dist, level);
    }
    return UncertaintyLaw::from_sample(nodes);
}

double beta_kappa(const BernoulliSpec& s) { return s.mu * (1.0 - s.mu) / s.eta - 1.0; }

}  // namespace

void GaussianSpec::validate() const {
    if (!(nu > 0.0) || !(mu > 0.0) || !(eta >= 0.0) || !std::isfinite(nu) || !std::isfinite(mu) ||
        !std::isfinite(eta)) {
        throw ConfigError("Gaussian spec needs nu > 0, mu > 0, eta >= 0");
    }
}

void BernoulliSpec::validate() const {
    if (!(nu > 0.0) || nu > 0.25) throw ConfigError("Bernoulli spec needs 0 < nu <= 0.25");
    if (!(mu > 0.0) || !(mu < 1.0)) throw ConfigError("Bernoulli spec needs 0 < mu < 1");
    if (!(eta >= 0.0)) throw ConfigError("Bernoulli spec needs eta >= 0");
    // kappa = mu(1-mu)/eta - 1 must stay positive.
    if (eta > 0.0 && !(eta < mu * (1.0 - mu))) {
        throw ConfigError("Bernoulli spec needs eta < mu(1 - mu)");
    }
}

double BernoulliSpec::positive_rate() const { return 0.5 + std::sqrt(0.25 - nu); }

Sample gaussian_draw(const GaussianSpec& spec, Rng& rng) {
    std::normal_distribution<double> h_dist(0.0, std::sqrt(spec.nu));
    Sample s;
    const double h = h_dist(rng);
    double u = spec.mu;
    if (spec.eta > 0.0) {
        std::gamma_distribution<double> u_dist(spec.mu * spec.mu / spec.eta, spec.eta / spec.mu);
        u = u_dist(rng);
    }
    s.h = h;
    s.g = h + std::sqrt(u);
    s.u_hat = u;
    return s;
}

Sample bernoulli_draw(const BernoulliSpec& spec, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = unit(rng) < spec.positive_rate() ? 1.0 : 0.0;
    double u = spec.mu;
    if (spec.eta > 0.0) {
        const double kappa = beta_kappa(spec);
        std::gamma_distribution<double> a(kappa * spec.mu, 1.0);
        std::gamma_distribution<double> b(kappa * (1.0 - spec.mu), 1.0);
        const double x = a(rng);
        const double y = b(rng);
        u = (x + y > 0.0) ? x / (x + y) : spec.mu;
    }
    const bool flip = unit(rng) < u;
    Sample s;
    s.h = h;
    s.g = flip ? 1.0 - h : h;
    s.u_hat = u;
    return s;
}

Sample synthetic_draw(const SyntheticSpec& spec, Rng& rng) {
    return std::visit(
        [&](const auto& s) -> Sample {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, GaussianSpec>) {
                return gaussian_draw(s, rng);
            } else {
                return bernoulli_draw(s, rng);
            }
        },
        spec);
}

SampleSource synthetic_source(SyntheticSpec spec) {
    std::visit([](const auto& s) { s.validate(); }, spec);
    auto counter = std::make_shared<std::uint64_t>(0);
    return [spec, counter](Rng& rng) -> std::optional<Sample> {
        Sample s = synthetic_draw(spec, rng);
        s.x_id = (*counter)++;
        return s;
    };
}

PolicyParams analytic_params(const SyntheticSpec& spec, const RaterCosts& costs) {
    PolicyParams p;
    p.costs = costs;
    if (const auto* g = std::get_if<GaussianSpec>(&spec)) {
        g->validate();
        p.var_h = g->nu;
        p.mse = g->mu;
        p.u = g->eta > 0.0 ? quadrature_law(boost::math::gamma_distribution<double>(g->mu * g->mu / g->eta,
                                                                                     g->eta / g->mu))
                           : UncertaintyLaw::point_mass(g->mu);
    } else {
        const auto& b = std::get<BernoulliSpec>(spec);
        b.validate();
        p.var_h = b.nu;
        p.mse = b.mu;
        if (b.eta > 0.0) {
            const double kappa = beta_kappa(b);
            p.u = quadrature_law(boost::math::beta_distribution<double>(kappa * b.mu, kappa * (1.0 - b.mu)));
        } else {
            p.u = UncertaintyLaw::point_mass(b.mu);
        }
    }
    return p;
}

PolicyParams bernoulli_max_variance_params(double nu, double mu, const RaterCosts& costs) {
    if (!(nu > 0.0) || nu > 0.25 || !(mu > 0.0) || !(mu < 1.0)) {
        throw ConfigError("binary-U limit needs 0 < nu <= 0.25 and 0 < mu < 1");
    }
    PolicyParams p;
    p.costs = costs;
    p.var_h = nu;
    p.mse = mu;
    const double values[] = {0.0, 1.0};
    const double weights[] = {1.0 - mu, mu};
    p.u = UncertaintyLaw::from_weighted(values, weights);
    return p;
}

PolicyParams oracle_params(const SyntheticSpec& spec, const RaterCosts& costs) {
    PolicyParams p;
    if (const auto* b = std::get_if<BernoulliSpec>(&spec)) {
        b->validate();
        p = bernoulli_max_variance_params(b->nu, b->mu, costs);
    } else {
        // (H - G)^2 = U exactly for the Gaussian generator.
        p = analytic_params(spec, costs);
    }
    p.realized_errors = true;
    return p;
}

double synthetic_mean(const SyntheticSpec& spec) {
    if (std::holds_alternative<GaussianSpec>(spec)) return 0.0;
    return std::get<BernoulliSpec>(spec).positive_rate();
}

}  // namespace costeval

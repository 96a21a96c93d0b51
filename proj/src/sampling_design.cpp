#include "costeval/sampling_design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace costeval {

double nu_of_x(double pi_x, double second_moment_h, double u_x) {
    if (!(pi_x > 0.0) || pi_x > 1.0) throw std::invalid_argument("annotation probability must lie in (0, 1]");
    if (!(second_moment_h >= 0.0) || !(u_x >= 0.0)) throw std::invalid_argument("moments must be non-negative");
    return second_moment_h + (1.0 / pi_x - 1.0) * u_x;
}

InputDesign optimal_input_distribution(std::span<const double> base, std::span<const double> nu) {
    if (base.empty() || base.size() != nu.size()) throw std::invalid_argument("P and nu must be non-empty and aligned");
    double mass = 0.0;
    for (double p : base) {
        if (!(p >= 0.0)) throw std::invalid_argument("P must be non-negative");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("P must sum to 1");

    InputDesign d;
    d.base.assign(base.begin(), base.end());
    d.nu.assign(nu.begin(), nu.end());
    d.q_star.resize(base.size());
    double root_max = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!(nu[i] >= 0.0)) throw std::invalid_argument("nu must be non-negative");
        if (base[i] > 0.0) root_max = std::max(root_max, std::sqrt(nu[i]));
    }
    if (!(root_max > 0.0)) throw std::invalid_argument("nu is zero wherever P has mass");
    // Strata with nu = 0 keep a sliver of mass so Q covers the support of P.
    const double root_floor = 1e-12 * root_max;
    double norm = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        d.q_star[i] = base[i] * std::max(std::sqrt(nu[i]), root_floor);
        norm += d.q_star[i];
    }
    for (auto& q : d.q_star) q /= norm;
    return d;
}

double reweighted_increment_variance(std::span<const double> base, std::span<const double> nu,
                                     std::span<const double> q, double theta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i] == 0.0) continue;
        if (!(q[i] > 0.0)) throw std::invalid_argument("sampling law must cover the support of P");
        acc += base[i] * base[i] * nu[i] / q[i];
    }
    return acc - theta * theta;
}

}  // namespace costeval

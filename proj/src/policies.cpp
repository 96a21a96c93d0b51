#include "costeval/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace costeval {

// ---------------------------------------------------------------- law

UncertaintyLaw UncertaintyLaw::from_sample(std::span<const double> u) {
    std::vector<double> w(u.size(), 1.0);
    return from_weighted(u, w);
}

UncertaintyLaw UncertaintyLaw::from_weighted(std::span<const double> u, std::span<const double> weights) {
    if (u.empty()) throw std::invalid_argument("uncertainty law needs at least one atom");
    if (u.size() != weights.size()) throw std::invalid_argument("uncertainty values and weights differ in length");

    std::vector<std::size_t> order(u.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });

    UncertaintyLaw law;
    law.u_.reserve(u.size());
    law.w_.reserve(u.size());
    double total = 0.0;
    for (auto i : order) {
        if (!(u[i] >= 0.0) || !std::isfinite(u[i])) throw std::invalid_argument("uncertainty values must be finite and >= 0");
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw std::invalid_argument("weights must be finite and >= 0");
        law.u_.push_back(u[i]);
        law.w_.push_back(weights[i]);
        total += weights[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("uncertainty weights sum to zero");
    for (auto& w : law.w_) w /= total;
    law.finalize();
    return law;
}

UncertaintyLaw UncertaintyLaw::point_mass(double u) {
    const double one = 1.0;
    return from_weighted(std::span<const double>(&u, 1), std::span<const double>(&one, 1));
}

void UncertaintyLaw::finalize() {
    const std::size_t n = u_.size();
    s_.resize(n);
    cw_.assign(n + 1, 0.0);
    cws_.assign(n + 1, 0.0);
    cwu_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s_[i] = std::sqrt(u_[i]);
        cw_[i + 1] = cw_[i] + w_[i];
        cws_[i + 1] = cws_[i] + w_[i] * s_[i];
        cwu_[i + 1] = cwu_[i] + w_[i] * u_[i];
    }
    total_wu_ = cwu_[n];
}

double UncertaintyLaw::variance() const {
    const double m = mean();
    return expect([m](double u) { return (u - m) * (u - m); });
}

std::size_t UncertaintyLaw::count_at_most(double s) const {
    return static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin());
}

std::size_t UncertaintyLaw::count_below(double s) const {
    return static_cast<std::size_t>(std::lower_bound(s_.begin(), s_.end(), s) - s_.begin());
}

double UncertaintyLaw::tail_mass(double tau) const {
    const auto k = count_at_most(tau);
    return std::max(0.0, 1.0 - cw_[k]);
}

double UncertaintyLaw::head_moment(double tau) const { return cwu_[count_at_most(tau)]; }

void PolicyParams::validate() const {
    if (!(var_h >= 0.0) || !std::isfinite(var_h)) throw std::invalid_argument("Var(H) must be finite and >= 0");
    if (!(mse >= 0.0) || !std::isfinite(mse)) throw std::invalid_argument("MSE(H, G) must be finite and >= 0");
    if (u.empty()) throw std::invalid_argument("policy parameters carry no uncertainty law");
}

// ---------------------------------------------------------------- policy

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Base: return "base";
        case PolicyKind::Random: return "random";
        case PolicyKind::Active: return "active";
        case PolicyKind::Oracle: return "oracle";
    }
    return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
    if (name == "base") return PolicyKind::Base;
    if (name == "random") return PolicyKind::Random;
    if (name == "active") return PolicyKind::Active;
    if (name == "oracle") return PolicyKind::Oracle;
    throw ConfigError("unknown policy kind '" + name + "'");
}

namespace {

double clamp_probability(double p) { return std::clamp(p, kMinProbability, 1.0); }

}  // namespace

Policy Policy::base() { return Policy{}; }

Policy Policy::random(double rate) {
    if (!(rate > 0.0) || rate > 1.0) throw std::invalid_argument("fixed annotation rate must lie in (0, 1]");
    Policy p;
    p.kind_ = PolicyKind::Random;
    p.rate_ = clamp_probability(rate);
    return p;
}

Policy Policy::active(double gamma, double tau) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("active scaling factor must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("clipping threshold must be positive");
    Policy p;
    p.kind_ = PolicyKind::Active;
    p.gamma_ = gamma;
    p.tau_ = tau;
    return p;
}

Policy Policy::oracle(double gamma, double tau) {
    Policy p = active(gamma, tau);
    p.kind_ = PolicyKind::Oracle;
    return p;
}

double Policy::probability_for_u(double u) const {
    switch (kind_) {
        case PolicyKind::Base: return 1.0;
        case PolicyKind::Random: return rate_;
        case PolicyKind::Active:
        case PolicyKind::Oracle: {
            const double s = std::sqrt(std::max(u, 0.0));
            if (s > tau_) return 1.0;
            return clamp_probability(gamma_ * s);
        }
    }
    return 1.0;
}

double Policy::probability(const Sample& sample) const {
    if (kind_ == PolicyKind::Oracle) {
        if (!sample.h) throw std::invalid_argument("oracle policy needs the strong rating of every sample");
        const double e = *sample.h - sample.g;
        return probability_for_u(e * e);
    }
    return probability_for_u(sample.u_hat);
}

nlohmann::json Policy::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    if (kind_ == PolicyKind::Active || kind_ == PolicyKind::Oracle) {
        j["gamma"] = gamma_;
        j["tau"] = tau_;
    } else {
        j["p"] = rate_;
    }
    j["p_min"] = kMinProbability;
    return j;
}

Policy Policy::from_json(const nlohmann::json& j) {
    const auto kind = policy_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
        case PolicyKind::Base: return base();
        case PolicyKind::Random: return random(j.at("p").get<double>());
        case PolicyKind::Active: return active(j.at("gamma").get<double>(), j.at("tau").get<double>());
        case PolicyKind::Oracle: return oracle(j.at("gamma").get<double>(), j.at("tau").get<double>());
    }
    throw ConfigError("unreachable policy kind");
}

// ---------------------------------------------------------------- functionals

PolicyMoments policy_moments(const Policy& policy, const UncertaintyLaw& law) {
    PolicyMoments m{0.0, 0.0};
    const auto& u = law.values();
    const auto& w = law.weights();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double pi = policy.probability_for_u(u[i]);
        m.mean_pi += w[i] * pi;
        m.mean_u_over_pi += w[i] * u[i] / pi;
    }
    // Quadrature weights can sum to 1 + O(1e-13).
    m.mean_pi = std::min(m.mean_pi, 1.0);
    return m;
}

double budget_objective(const Policy& policy, const PolicyParams& params) {
    const auto m = policy_moments(policy, params.u);
    const auto& c = params.costs;
    return (c.strong() * m.mean_pi + c.weak()) * (params.var_h - params.u.mean() + m.mean_u_over_pi);
}

double error_of_policy(const PolicyParams& params, const Policy& policy, double steps) {
    const auto m = policy_moments(policy, params.u);
    return error_of_policy(params.var_h, params.mse, m.mean_u_over_pi, steps);
}

double optimal_random_rate(const PolicyParams& params) {
    if (!(params.var_h >= 0.0) || !(params.mse >= 0.0)) {
        throw std::invalid_argument("Var(H) and MSE(H, G) must be non-negative");
    }
    const auto& c = params.costs;
    const double threshold = c.strong() / (c.strong() + c.weak()) * params.var_h;
    if (!(params.mse < threshold)) return 1.0;
    return clamp_probability(std::sqrt(c.ratio() * params.mse / (params.var_h - params.mse)));
}

namespace {

struct IntegerRange {
    long long lo;
    long long hi;
};

// k steps with rate (B - k c_g) / (k c_h) in (0, 1].
IntegerRange feasible_steps(const RaterCosts& c, double budget) {
    const auto lo = static_cast<long long>(std::ceil(budget / (c.strong() + c.weak())));
    auto hi = static_cast<long long>(std::floor(budget / c.weak()));
    if (budget - static_cast<double>(hi) * c.weak() <= 0.0) --hi;
    return {std::max(lo, 1LL), hi};
}

}  // namespace

double integer_time_error(const PolicyParams& params, double rate, double budget) {
    const auto& c = params.costs;
    const double steps = std::floor(budget / (c.strong() * rate + c.weak()));
    if (steps < 1.0) throw std::invalid_argument("budget affords no step at this rate");
    return (params.var_h - params.mse + params.mse / rate) / steps;
}

double optimal_random_rate_integer(const PolicyParams& params, double budget) {
    if (!(params.var_h >= 0.0) || !(params.mse >= 0.0)) {
        throw std::invalid_argument("Var(H) and MSE(H, G) must be non-negative");
    }
    const auto& c = params.costs;
    if (!(budget >= c.weak() + c.strong())) throw std::invalid_argument("budget must cover c_g + c_h");
    const auto range = feasible_steps(c, budget);
    if (range.lo > range.hi) throw std::invalid_argument("no feasible integer number of steps");

    const double spread = params.var_h - params.mse;  // Var(H) - E[(H-G)^2]
    const double err = params.mse;
    auto objective = [&](long long k) {
        const double kd = static_cast<double>(k);
        return spread / kd + c.strong() * err / (budget - kd * c.weak());
    };
    auto rate_of = [&](long long k) {
        const double kd = static_cast<double>(k);
        return (budget - kd * c.weak()) / (kd * c.strong());
    };

    std::vector<long long> candidates;
    if (spread <= 0.0) {
        candidates.push_back(range.lo);
    } else if (err <= 0.0) {
        candidates.push_back(range.hi);
    } else {
        // Stationary point of the convex objective in k.
        const double k_star = budget / (c.weak() + std::sqrt(c.weak() * c.strong() * err / spread));
        for (double k : {std::floor(k_star), std::ceil(k_star)}) {
            const auto ki = std::clamp(static_cast<long long>(k), range.lo, range.hi);
            if (candidates.empty() || candidates.back() != ki) candidates.push_back(ki);
        }
    }

    double best_rate = 1.0;
    double best = integer_time_error(params, 1.0, budget);
    for (auto k : candidates) {
        const double value = objective(k);
        if (value < best) {
            best = value;
            best_rate = rate_of(k);
        }
    }
    return clamp_probability(best_rate);
}

double gamma_star(double tau, const PolicyParams& params) {
    if (!(tau > 0.0)) throw std::invalid_argument("clipping threshold must be positive");
    const double cap = 1.0 / tau;
    const double numerator = params.costs.ratio() + params.u.tail_mass(tau);
    const double denominator = params.var_h - params.u.head_moment(tau);
    if (!(denominator > 0.0)) return cap;
    return std::min(std::sqrt(numerator / denominator), cap);
}

double tau_objective(double tau, const PolicyParams& params) {
    const double gamma = gamma_star(tau, params);
    const auto& law = params.u;
    const std::size_t n = law.size();
    const std::size_t head = law.count_at_most(tau);
    const std::size_t floor_end = std::min(law.count_below(kMinProbability / gamma), head);

    const double w_floor = law.prefix_weight(floor_end);
    const double wu_floor = law.prefix_wu(floor_end);
    const double ws_mid = law.prefix_ws(head) - law.prefix_ws(floor_end);
    const double w_tail = law.prefix_weight(n) - law.prefix_weight(head);
    const double wu_tail = law.prefix_wu(n) - law.prefix_wu(head);

    const double mean_pi = kMinProbability * w_floor + gamma * ws_mid + w_tail;
    const double mean_u_over_pi = wu_floor / kMinProbability + ws_mid / gamma + wu_tail;
    const auto& c = params.costs;
    return (c.strong() * mean_pi + c.weak()) * (params.var_h - law.mean() + mean_u_over_pi);
}

TauChoice optimize_tau(const PolicyParams& params, std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
    for (double t : grid) {
        if (!(t > 0.0)) throw std::invalid_argument("threshold grid must contain only positive values");
    }
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());

    TauChoice best{sorted.front(), gamma_star(sorted.front(), params), tau_objective(sorted.front(), params)};
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double value = tau_objective(sorted[i], params);
        // Relative slack keeps rounding noise from overriding the smallest-tau tie rule.
        if (value < best.objective * (1.0 - 1e-12)) {
            best = {sorted[i], gamma_star(sorted[i], params), value};
        }
    }
    return best;
}

std::vector<double> default_tau_grid(const UncertaintyLaw& law) {
    constexpr std::size_t kLevels = 101;
    constexpr std::size_t kExactSupport = 512;

    std::vector<double> points;
    const auto& s = law.roots();
    std::vector<double> distinct;
    for (double v : s) {
        if (v > 0.0 && (distinct.empty() || distinct.back() != v)) distinct.push_back(v);
    }

    if (distinct.size() <= kExactSupport) {
        points = distinct;
    } else {
        // Inverse-CDF quantiles of sqrt(U).
        const auto& w = law.weights();
        double cum = 0.0;
        std::size_t i = 0;
        for (std::size_t level = 0; level < kLevels; ++level) {
            const double target = static_cast<double>(level) / static_cast<double>(kLevels - 1);
            while (i + 1 < s.size() && cum + w[i] < target) cum += w[i++];
            if (s[i] > 0.0) points.push_back(s[i]);
        }
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());
    }

    std::vector<double> grid;
    if (!points.empty()) {
        grid.push_back(0.5 * points.front());
        for (std::size_t i = 0; i < points.size(); ++i) {
            grid.push_back(points[i]);
            if (i + 1 < points.size()) grid.push_back(0.5 * (points[i] + points[i + 1]));
        }
    }
    const double top = s.empty() ? 0.0 : s.back();
    grid.push_back(top > 0.0 ? top * (1.0 + 1e-6) : 1.0);
    return grid;
}

Policy make_policy(PolicyKind kind, const PolicyParams& params, std::optional<std::vector<double>> tau_grid) {
    switch (kind) {
        case PolicyKind::Base: return Policy::base();
        case PolicyKind::Random: return Policy::random(optimal_random_rate(params));
        case PolicyKind::Active:
        case PolicyKind::Oracle: {
            if (kind == PolicyKind::Oracle && !params.realized_errors) {
                throw std::invalid_argument("oracle policy requires realized (h - g)^2 for the full data");
            }
            params.validate();
            const auto grid = tau_grid ? *tau_grid : default_tau_grid(params.u);
            const auto choice = optimize_tau(params, grid);
            return kind == PolicyKind::Oracle ? Policy::oracle(choice.gamma, choice.tau)
                                              : Policy::active(choice.gamma, choice.tau);
        }
    }
    throw std::invalid_argument("unknown policy kind");
}

}  // namespace costeval

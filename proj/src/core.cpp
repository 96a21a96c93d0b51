#include "costeval/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "costeval/format.hpp"

namespace costeval {

RaterCosts::RaterCosts(double weak, double strong) : weak_(weak), strong_(strong) {
    if (!(weak > 0.0) || !std::isfinite(strong) || !(strong > weak)) {
        throw ConfigError("rater costs must satisfy c_h > c_g > 0 (got c_g=" + format_double(weak) +
                          ", c_h=" + format_double(strong) + ")");
    }
}

EstimatorState::EstimatorState(RaterCosts costs, double budget) : costs_(costs), budget_(budget) {
    if (!(budget >= costs.weak() + costs.strong())) {
        throw ConfigError("budget must cover at least one fully annotated step (c_g + c_h)");
    }
}

bool EstimatorState::can_afford_step() const noexcept {
    // Slack absorbs rounding from repeated fractional charges.
    return spent_ + costs_.weak() <= budget_ * (1.0 + 1e-12);
}

void EstimatorState::charge(bool queried_strong) {
    spent_ += costs_.weak();
    if (queried_strong) spent_ += costs_.strong();
}

void EstimatorState::add_increment(double delta) {
    ++t_;
    sum_delta_ += delta;
}

double EstimatorState::estimate() const {
    if (t_ == 0) throw std::logic_error("estimate requested before any step");
    return sum_delta_ / static_cast<double>(t_);
}

double active_increment(double g, std::optional<double> h, bool xi, double pi_x) {
    if (!(pi_x > 0.0) || pi_x > 1.0) {
        throw std::invalid_argument("annotation probability must lie in (0, 1]");
    }
    if (!xi) return g;
    if (!h) throw std::invalid_argument("strong rating missing for a queried sample");
    return g + (*h - g) / pi_x;
}

double increment_variance(double var_h, double mse, double mean_u_over_pi) {
    return var_h - mse + mean_u_over_pi;
}

double error_of_policy(double var_h, double mse, double mean_u_over_pi, double steps) {
    if (!(steps > 0.0)) throw std::invalid_argument("number of steps must be positive");
    return increment_variance(var_h, mse, mean_u_over_pi) / steps;
}

double cost_of_policy(const RaterCosts& costs, double mean_pi, double steps) {
    if (!(mean_pi > 0.0) || mean_pi > 1.0) {
        throw std::invalid_argument("mean annotation rate must lie in (0, 1]");
    }
    return steps * (costs.strong() * mean_pi + costs.weak());
}

double stopping_time(const RaterCosts& costs, double mean_pi, double budget) {
    return budget / (costs.strong() * mean_pi + costs.weak());
}

namespace {

// Draws one sample, decides xi, charges and records the increment.
void take_step(const SampleSource& source, const ProbabilityFn& probability, EstimatorState& state, Rng& rng,
               TrialResult& result, bool keep_records) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto drawn = source(rng);
    if (!drawn) {
        throw DataError(state.steps() == 0 ? "sample source is empty" : "sample source exhausted before the budget");
    }
    const double pi_x = probability(*drawn);
    if (!(pi_x > 0.0) || pi_x > 1.0 || std::isnan(pi_x)) {
        throw std::domain_error("policy returned a probability outside (0, 1]");
    }
    const bool xi = unit(rng) < pi_x;
    if (xi && !drawn->h) throw DataError("source did not provide a strong rating");

    TrialRecord rec;
    rec.sample = *drawn;
    if (!xi) rec.sample.h.reset();
    rec.pi_x = pi_x;
    rec.xi = xi;
    rec.delta = active_increment(drawn->g, rec.sample.h, xi, pi_x);

    state.charge(xi);
    state.add_increment(rec.delta);
    rec.cumulative_cost = state.spent();
    if (keep_records) result.records.push_back(std::move(rec));
}

TrialResult finish(const EstimatorState& state, TrialResult result) {
    result.estimate = state.estimate();
    result.spent = state.spent();
    result.steps = state.steps();
    return result;
}

}  // namespace

TrialResult run_trial(const SampleSource& source, const ProbabilityFn& probability,
                      const RaterCosts& costs, double budget, Rng& rng, bool keep_records) {
    EstimatorState state(costs, budget);
    TrialResult result;
    while (state.can_afford_step()) take_step(source, probability, state, rng, result, keep_records);
    return finish(state, std::move(result));
}

std::uint64_t horizon_steps(const RaterCosts& costs, double mean_pi, double budget) {
    if (!(mean_pi > 0.0) || mean_pi > 1.0) {
        throw std::invalid_argument("mean annotation rate must lie in (0, 1]");
    }
    // Small slack so exact multiples are not lost to rounding.
    const double t = std::floor(stopping_time(costs, mean_pi, budget) * (1.0 + 1e-12));
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(t));
}

TrialResult run_trial_steps(const SampleSource& source, const ProbabilityFn& probability,
                            const RaterCosts& costs, std::uint64_t steps, Rng& rng, bool keep_records) {
    if (steps == 0) throw std::invalid_argument("horizon must be at least one step");
    // The budget here only labels the state; the horizon alone decides when to stop.
    EstimatorState state(costs, costs.weak() + costs.strong());
    TrialResult result;
    for (std::uint64_t t = 0; t < steps; ++t) take_step(source, probability, state, rng, result, keep_records);
    return finish(state, std::move(result));
}

Rng trial_rng(std::uint64_t seed, std::uint64_t index) { return trial_rng(seed, {index}); }

Rng trial_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto p : path) push(p);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

void write_trace_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << "t,x_id,g,h,xi,pi_x,delta,cumulative_cost\n";
    std::uint64_t t = 0;
    for (const auto& r : records) {
        out << ++t << ',' << r.sample.x_id << ',' << format_double(r.sample.g) << ',';
        if (r.sample.h) out << format_double(*r.sample.h);
        out << ',' << (r.xi ? 1 : 0) << ',' << format_double(r.pi_x) << ',' << format_double(r.delta)
            << ',' << format_double(r.cumulative_cost) << '\n';
    }
}

}  // namespace costeval

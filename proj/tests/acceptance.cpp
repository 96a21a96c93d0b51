// Acceptance checks, one line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "costeval/calibration.hpp"
#include "costeval/core.hpp"
#include "costeval/experiment.hpp"
#include "costeval/metrics.hpp"
#include "costeval/policies.hpp"
#include "costeval/sampling_design.hpp"
#include "costeval/synthetic.hpp"
#include "oracles.hpp"

#ifndef COSTEVAL_DATA_DIR
#define COSTEVAL_DATA_DIR "data"
#endif

using namespace costeval;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double log_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
}

// ---------------------------------------------------------------- 1

Outcome random_rate_optimality() {
    Rng rng(101);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        PolicyParams p;
        const double c_h = 1.0 + 9.0 * unit(rng);
        p.costs = RaterCosts(c_h * log_uniform(rng, 1e-3, 0.9), c_h);
        p.var_h = 0.1 + 2.0 * unit(rng);
        p.mse = p.var_h * unit(rng);
        p.u = UncertaintyLaw::point_mass(p.mse);
        const double got = optimal_random_rate(p);
        const double ref = oracle::grid_random_rate(p.costs.weak(), p.costs.strong(), p.var_h, p.mse, 1e-4);
        worst = std::max(worst, std::abs(got - ref));
    }
    return {worst <= 1e-3, fmt("max |p - p_grid| = %.3g over 20 configs (tol 1e-3)", worst)};
}

// ---------------------------------------------------------------- 2

Outcome active_optimality() {
    Rng rng(202);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> atoms(2, 8);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        oracle::DiscreteLaw law;
        const int n = atoms(rng);
        for (int k = 0; k < n; ++k) {
            law.u.push_back(log_uniform(rng, 1e-3, 2.0));
            law.w.push_back(0.1 + unit(rng));
        }
        const double total = std::accumulate(law.w.begin(), law.w.end(), 0.0);
        for (auto& w : law.w) w /= total;

        PolicyParams p;
        p.u = UncertaintyLaw::from_weighted(law.u, law.w);
        p.mse = p.u.mean();
        p.var_h = p.mse * (0.8 + 3.0 * unit(rng));
        p.costs = RaterCosts(log_uniform(rng, 1e-3, 0.5), 1.0);
        const auto choice = optimize_tau(p, default_tau_grid(p.u));
        const double brute = oracle::brute_force_active(law, p.var_h, p.costs.weak(), p.costs.strong(), 500);
        worst = std::max(worst, choice.objective / brute - 1.0);
    }
    return {worst <= 0.01, fmt("max J(tau*)/J_brute - 1 = %.3g over 10 laws (tol 1e-2)", worst)};
}

// ---------------------------------------------------------------- 3

Outcome unbiasedness() {
    // Judged on the fixed-horizon estimator, whose stopping time ignores the xi draws.
    // The budget rule is reported alongside: its mean of increments carries an O(1/T)
    // ratio bias that the same test resolves at this budget.
    auto z_scores = [](const char* stopping, bool& all_within) {
        nlohmann::json j{{"source", {{"family", "gaussian"}, {"nu", 1.0}, {"mu", 0.2}, {"eta", 0.2}}},
                         {"costs", {{"ratio", 0.1}}},
                         {"budgets", {20.0}},
                         {"policies", {"base", "random", "active", "oracle"}},
                         {"stopping", stopping},
                         {"trials", 10000},
                         {"seed", 303},
                         {"bootstrap_resamples", 100}};
        const auto r = run_experiment(ExperimentConfig::from_json(j));
        std::ostringstream out;
        all_within = true;
        for (const auto& run : r.runs) {
            const auto m = oracle::moments(run.estimates[0]);
            const double z = (m.mean - r.theta_star) / m.se;
            all_within &= std::abs(z) < 3.0;
            out << to_string(run.kind) << fmt(" z=%.2f ", z);
        }
        return out.str();
    };
    bool horizon_ok = false, budget_ok = false;
    const auto horizon = z_scores("horizon", horizon_ok);
    const auto budget = z_scores("budget", budget_ok);
    return {horizon_ok, "horizon rule: " + horizon + "(|z| < 3, 10k trials, B = 20); budget rule: " + budget +
                            (budget_ok ? "" : "(stopping-time bias, informational)")};
}

// ---------------------------------------------------------------- 4

Outcome constant_u_reduction() {
    double worst_pi = 0.0, worst_ratio = 0.0;
    Rng rng(404);
    for (double mu : {0.05, 0.2, 0.6}) {
        for (double ratio : {0.01, 0.1, 0.5}) {
            const GaussianSpec spec{1.0, mu, 0.0};
            const auto p = analytic_params(spec, RaterCosts(ratio, 1.0));
            const auto active = make_policy(PolicyKind::Active, p);
            const auto random = make_policy(PolicyKind::Random, p);
            for (int i = 0; i < 1000; ++i) {
                const auto s = gaussian_draw(spec, rng);
                worst_pi = std::max(worst_pi, std::abs(active.probability(s) - random.probability(s)));
            }
            worst_ratio = std::max(worst_ratio, std::abs(error_ratio(active, random, p) - 1.0));
        }
    }
    return {worst_pi <= 1e-12 && worst_ratio <= 1e-9,
            fmt("max |pi_active - pi_random| = %.3g (tol 1e-12), max |ratio - 1| = %.3g (tol 1e-9)", worst_pi,
                worst_ratio)};
}

// ---------------------------------------------------------------- 5

Outcome binary_closed_form() {
    const double c = 0.1, mse = 0.1, v = 0.25;
    const auto p = bernoulli_max_variance_params(v, mse, RaterCosts(c, 1.0));
    const double got = error_ratio(make_policy(PolicyKind::Active, p), Policy::base(), p);
    const double gamma = std::sqrt(c / (v - mse));
    const double closed = std::min((gamma * mse + c) * (1.0 + (1.0 / gamma - 1.0) * mse / v), mse + c);
    const double err = std::abs(got - closed);
    return {err <= 1e-6, fmt("ratio %.9f vs closed form %.9f, |diff| = %.3g (tol 1e-6)", got, closed, err)};
}

// ---------------------------------------------------------------- 6

Outcome figure_trends() {
    const RaterCosts base_costs(0.1, 1.0);
    auto ratio_active_base = [](const PolicyParams& p) {
        return error_ratio(make_policy(PolicyKind::Active, p), Policy::base(), p);
    };
    auto ratio_active_random = [](const PolicyParams& p) {
        return error_ratio(make_policy(PolicyKind::Active, p), make_policy(PolicyKind::Random, p), p);
    };
    // Monotone up to relative rounding slack.
    auto monotone = [](const std::vector<double>& v, bool increasing) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            const double slack = 1e-9 * std::abs(v[i - 1]);
            if (increasing ? v[i] < v[i - 1] - slack : v[i] > v[i - 1] + slack) return false;
        }
        return true;
    };

    std::vector<double> by_mse, by_eta, by_cost;
    for (int i = 0; i < 10; ++i) {
        const double mu = 0.05 + 0.05 * i;
        by_mse.push_back(ratio_active_base(analytic_params(GaussianSpec{1.0, mu, 0.05}, base_costs)));
    }
    for (int i = 0; i < 10; ++i) {
        const double eta = 0.01 * std::pow(1.6, i);
        by_eta.push_back(ratio_active_random(analytic_params(GaussianSpec{1.0, 0.2, eta}, base_costs)));
    }
    for (int i = 0; i < 10; ++i) {
        const double ratio = 0.01 * std::pow(1.5, i);
        by_cost.push_back(ratio_active_base(analytic_params(GaussianSpec{1.0, 0.2, 0.2}, RaterCosts(ratio, 1.0))));
    }
    const bool a = monotone(by_mse, true), b = monotone(by_eta, false), c = monotone(by_cost, true);
    return {a && b && c,
            fmt("mse: %.3f..%.3f %s; eta: %.3f..%.3f %s; c_g/c_h: %.3f..%.3f %s", by_mse.front(), by_mse.back(),
                a ? "nondecreasing" : "NOT nondecreasing", by_eta.front(), by_eta.back(),
                b ? "nonincreasing" : "NOT nonincreasing", by_cost.front(), by_cost.back(),
                c ? "nondecreasing" : "NOT nondecreasing")};
}

// ---------------------------------------------------------------- 7

Outcome power_tuning() {
    // H ~ N(0, 1), G = 0.5 H + N(0, 0.75): E[G^2] = 1, E[HG] = 0.5, so lambda* = 0.5.
    SampleSource source = [](Rng& rng) -> std::optional<Sample> {
        std::normal_distribution<double> n01;
        const double h = n01(rng);
        return Sample{0, 0.5 * h + std::sqrt(0.75) * n01(rng), h, 0.0};
    };
    const ProbabilityFn half = [](const Sample&) { return 0.5; };
    const RaterCosts costs(0.1, 1.0);

    Rng rng(707);
    // Each step costs c_g + 0.5 c_h on average; 30,000 units gives about 50k steps.
    const auto big = run_trial(source, half, costs, 30000.0, rng);
    const double lambda = power_tune_lambda(big.records).value_or(1.0);

    std::vector<double> plain, tuned;
    for (std::uint64_t t = 0; t < 2000; ++t) {
        auto trng = trial_rng(707, t);
        const auto res = run_trial(source, half, costs, 300.0, trng);
        plain.push_back(res.estimate);
        tuned.push_back(power_tuned_estimate(res.records, power_tune_lambda(res.records).value_or(1.0)));
    }
    const double v_plain = oracle::moments(plain).var;
    const double v_tuned = oracle::moments(tuned).var;
    const double se = oracle::variance_se(plain);
    const bool ok = std::abs(lambda - 0.5) <= 0.05 && v_tuned <= v_plain + 2.0 * se;
    return {ok, fmt("lambda_hat = %.4f at n = %llu (target 0.5 +/- 0.05); Var tuned %.4g vs untuned %.4g + 2 SE %.3g",
                    lambda, static_cast<unsigned long long>(big.steps), v_tuned, v_plain, 2.0 * se)};
}

// ---------------------------------------------------------------- 8

Outcome noisy_policy_bound() {
    // (H - G)^2 is 0 or 1 for the Bernoulli generator, so b = 1.
    const BernoulliSpec spec{0.25, 0.2, 0.1};
    const auto params = analytic_params(spec, RaterCosts(0.1, 1.0));
    const auto star = make_policy(PolicyKind::Active, params);
    // Pseudo-random weight in [0, 1) keyed on the input, independent of its error.
    auto weight = [](double u) {
        const double x = u * 7919.0 * 1000.0;
        return x - std::floor(x);
    };

    bool ok = true;
    std::ostringstream detail;
    for (double delta : {0.1, 0.5, 1.0}) {
        Rng rng(static_cast<std::uint64_t>(800 + 10 * delta));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> d_star, d_tilde;
        double measured = 0.0;
        constexpr int n = 400000;
        for (int i = 0; i < n; ++i) {
            const auto s = bernoulli_draw(spec, rng);
            const double p_star = star.probability(s);
            const double p_tilde = 1.0 / (1.0 / p_star + 2.0 * delta * weight(s.u_hat));
            measured += 1.0 / p_tilde - 1.0 / p_star;
            const bool xs = unit(rng) < p_star;
            const bool xt = unit(rng) < p_tilde;
            d_star.push_back(active_increment(s.g, s.h, xs, p_star));
            d_tilde.push_back(active_increment(s.g, s.h, xt, p_tilde));
        }
        measured /= n;
        const double v_star = oracle::moments(d_star).var;
        const double v_tilde = oracle::moments(d_tilde).var;
        const double se = std::hypot(oracle::variance_se(d_star), oracle::variance_se(d_tilde));
        const bool pass = v_tilde <= v_star + 1.0 * measured + 3.0 * se;
        ok &= pass;
        detail << fmt("delta=%.3f: %.4f <= %.4f; ", measured, v_tilde, v_star + measured + 3.0 * se);
    }
    return {ok, detail.str()};
}

// ---------------------------------------------------------------- 9

Outcome integer_rate_exhaustive() {
    Rng rng(909);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int mismatches = 0;
    for (int i = 0; i < 50; ++i) {
        PolicyParams p;
        const double c_h = 1.0 + 4.0 * unit(rng);
        p.costs = RaterCosts(c_h * log_uniform(rng, 1e-2, 0.9), c_h);
        p.var_h = 0.1 + 2.0 * unit(rng);
        p.mse = p.var_h * unit(rng);
        p.u = UncertaintyLaw::point_mass(p.mse);
        const double lo = p.costs.weak() + p.costs.strong();
        const double budget = lo + (200.0 - lo) * unit(rng);
        const double got = optimal_random_rate_integer(p, budget);
        const auto ref = oracle::exhaustive_integer_rate(p.costs.weak(), p.costs.strong(), p.var_h, p.mse, budget);
        if (std::abs(got - std::max(ref.rate, kMinProbability)) > 1e-12 * std::max(1.0, ref.rate)) ++mismatches;
    }
    return {mismatches == 0, fmt("%d of 50 instances differ from exhaustive k enumeration", mismatches)};
}

// ---------------------------------------------------------------- 10

Outcome input_design() {
    Rng rng(1010);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_norm = 0.0, worst_gap = 0.0;
    bool beats_grid = true;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> p(5), nu(5);
        for (auto& v : p) v = 0.05 + unit(rng);
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= total;
        for (auto& v : nu) v = 0.1 + 5.0 * unit(rng);
        const auto d = optimal_input_distribution(p, nu);
        worst_norm = std::max(worst_norm, std::abs(std::accumulate(d.q_star.begin(), d.q_star.end(), 0.0) - 1.0));
        if (rep < 5) {
            const double at = oracle::design_objective(p, nu, d.q_star);
            const double grid = oracle::simplex_grid_min(p, nu, 40);
            beats_grid &= at <= grid * (1.0 + 1e-12);
            worst_gap = std::max(worst_gap, grid / at - 1.0);
        }
    }

    // Q*-reweighted estimator on five strata: H | x ~ N(m_x, 1), G = H + 0.3 + N(0, s_x^2).
    const std::vector<double> p{0.1, 0.3, 0.2, 0.25, 0.15};
    const std::vector<double> m{-1.0, 0.5, 2.0, 0.0, 1.0};
    const std::vector<double> s{0.2, 1.0, 0.5, 1.5, 0.1};
    const std::vector<double> pi{1.0, 0.5, 0.7, 0.4, 1.0};
    std::vector<double> nu(5);
    double theta = 0.0;
    for (int x = 0; x < 5; ++x) {
        nu[x] = nu_of_x(pi[x], m[x] * m[x] + 1.0, 0.09 + s[x] * s[x]);
        theta += p[x] * m[x];
    }
    const auto d = optimal_input_distribution(p, nu);
    std::discrete_distribution<int> pick(d.q_star.begin(), d.q_star.end());
    std::vector<double> estimates;
    for (std::uint64_t t = 0; t < 10000; ++t) {
        auto trng = trial_rng(1010, t);
        std::normal_distribution<double> n01;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double acc = 0.0;
        for (int step = 0; step < 50; ++step) {
            const int x = pick(trng);
            const double h = m[x] + n01(trng);
            const double g = h + 0.3 + s[x] * n01(trng);
            const bool xi = u01(trng) < pi[x];
            acc += p[x] / d.q_star[x] * active_increment(g, h, xi, pi[x]);
        }
        estimates.push_back(acc / 50.0);
    }
    const auto mo = oracle::moments(estimates);
    const double z = (mo.mean - theta) / mo.se;
    const bool ok = worst_norm <= 1e-12 && beats_grid && std::abs(z) < 3.0;
    return {ok, fmt("max |sum Q* - 1| = %.2g; Q* <= 1/40 simplex-grid min on 5 supports (max grid gap %.3g); "
                    "reweighted z = %.2f",
                    worst_norm, worst_gap, z)};
}

// ---------------------------------------------------------------- 11

Outcome burnin_pipeline() {
    nlohmann::json j{{"source", {{"family", "bernoulli"}, {"nu", 0.25}, {"mu", 0.2}, {"eta", 0.1}}},
                     {"costs", {{"c_g", 0.1}, {"c_h", 1.0}}},
                     {"budgets", {500.0}},
                     {"policies", {"base", "active"}},
                     {"estimation", {{"mode", "burnin"}, {"n_b", 200}}},
                     {"trials", 10000},
                     {"seed", 1111},
                     {"bootstrap_resamples", 100}};
    const auto r = run_experiment(ExperimentConfig::from_json(j));
    const auto& active = r.find(PolicyKind::Active)->estimates[0];
    const auto& base = r.find(PolicyKind::Base)->estimates[0];
    const auto ma = oracle::moments(active);
    const double z = (ma.mean - r.theta_star) / ma.se;

    auto sq_errors = [&](const std::vector<double>& e) {
        std::vector<double> out;
        for (double v : e) out.push_back((v - r.theta_star) * (v - r.theta_star));
        return oracle::moments(out);
    };
    const auto sa = sq_errors(active), sb = sq_errors(base);
    const bool ok = std::abs(z) < 3.0 && sa.mean <= sb.mean + 2.0 * sb.se;
    return {ok, fmt("combined estimate z = %.2f (|z| < 3); MSE active %.4g vs base %.4g + 2 SE %.2g", z, sa.mean,
                    sb.mean, 2.0 * sb.se)};
}

// ---------------------------------------------------------------- 12

Outcome replay_integration() {
    const std::string path = std::string(COSTEVAL_DATA_DIR) + "/replay_demo.csv";
    nlohmann::json j{{"source", {{"dataset", path}}},
                     {"costs", {{"c_g", 0.05}, {"c_h", 1.0}}},
                     {"budgets", log_budget_grid(10.0, 1000.0, 9)},
                     {"policies", {"base", "random", "active"}},
                     {"trials", 2000},
                     {"seed", 1212},
                     {"bootstrap_resamples", 200}};
    const auto r = run_experiment(ExperimentConfig::from_json(j));
    const auto* active = r.find(PolicyKind::Active);
    double sum = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < active->curve.points.size(); ++i) {
        if (active->effective_budget_saturated[i]) continue;
        sum += active->effective_budget[i] / active->curve.points[i].budget;
        ++used;
    }
    const double mean_ratio = used ? sum / used : 0.0;

    // Analytic ratio of cost-adjusted error constants for the same dataset.
    const auto params = empirical_params(load_dataset(path), RaterCosts(0.05, 1.0));
    const double analytic = (1.0 + 0.05) * params.var_h / budget_objective(make_policy(PolicyKind::Active, params), params);
    return {used >= 3 && mean_ratio >= 1.5,
            fmt("mean effective budget / B = %.2f over %d unsaturated budgets (need >= 1.5; analytic %.2f)",
                mean_ratio, used, analytic)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"random-rate optimality", random_rate_optimality},
        {"active-policy optimality", active_optimality},
        {"unbiasedness", unbiasedness},
        {"constant-U reduction", constant_u_reduction},
        {"binary-U closed form", binary_closed_form},
        {"error-ratio trends", figure_trends},
        {"power tuning", power_tuning},
        {"noisy-policy bound", noisy_policy_bound},
        {"integer-time rate", integer_rate_exhaustive},
        {"input sampling design", input_design},
        {"burn-in pipeline", burnin_pipeline},
        {"replay integration", replay_integration},
    };
    // Runtime ceilings in seconds; zero means none.
    const double ceilings[] = {1.0, 30.0, 120.0, 0.0, 0.0, 60.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ceilings[i] > 0.0 && secs > ceilings[i]) {
            out.pass = false;
            out.detail += fmt(" [runtime %.1fs exceeds %.0fs]", secs, ceilings[i]);
        }
        failures += out.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    out.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures;
}

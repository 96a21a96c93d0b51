#include "costeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace costeval {

namespace {

double cost_adjusted_error(const Policy& p, const PolicyParams& params) {
    const auto& c = params.costs;
    if (p.kind() == PolicyKind::Base) return c.strong() * params.var_h;
    const auto m = policy_moments(p, params.u);
    return (c.strong() * m.mean_pi + c.weak()) * (params.var_h - params.mse + m.mean_u_over_pi);
}

// Linear-interpolated percentile of sorted values.
double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double error_ratio(const Policy& p1, const Policy& p2, const PolicyParams& params) {
    const double denominator = cost_adjusted_error(p2, params);
    if (!(denominator > 0.0)) throw std::domain_error("error ratio denominator is zero");
    return cost_adjusted_error(p1, params) / denominator;
}

double mse_over_trials(std::span<const double> estimates, double theta_star) {
    if (estimates.empty()) throw std::invalid_argument("no estimates");
    double acc = 0.0;
    for (double e : estimates) acc += (e - theta_star) * (e - theta_star);
    return acc / static_cast<double>(estimates.size());
}

Interval bootstrap_ci(std::span<const double> estimates, double theta_star, Rng& rng, double level,
                      std::size_t resamples) {
    if (estimates.size() < 2) throw std::invalid_argument("bootstrap needs at least two estimates");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
    if (resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");

    std::vector<double> sq(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) sq[i] = (estimates[i] - theta_star) * (estimates[i] - theta_star);

    std::uniform_int_distribution<std::size_t> pick(0, sq.size() - 1);
    std::vector<double> stats(resamples);
    for (auto& stat : stats) {
        double acc = 0.0;
        for (std::size_t i = 0; i < sq.size(); ++i) acc += sq[pick(rng)];
        stat = acc / static_cast<double>(sq.size());
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - level;
    return {percentile(stats, alpha / 2.0), percentile(stats, 1.0 - alpha / 2.0)};
}

void BudgetCurve::validate() const {
    if (points.empty()) throw std::invalid_argument("budget curve '" + policy + "' is empty");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && !(points[i].budget > points[i - 1].budget)) {
            throw std::invalid_argument("budget curve '" + policy + "' budgets must be strictly increasing");
        }
        if (!(points[i].mse >= 0.0)) throw std::invalid_argument("budget curve MSE must be non-negative");
    }
}

std::vector<double> isotonic_nonincreasing(std::span<const double> values) {
    // Blocks of (mean, weight); merge while a later block exceeds an earlier one.
    std::vector<double> mean;
    std::vector<double> weight;
    for (double v : values) {
        mean.push_back(v);
        weight.push_back(1.0);
        while (mean.size() > 1 && mean[mean.size() - 1] > mean[mean.size() - 2]) {
            const double w = weight[weight.size() - 1] + weight[weight.size() - 2];
            const double m = (mean[mean.size() - 1] * weight[weight.size() - 1] +
                              mean[mean.size() - 2] * weight[weight.size() - 2]) / w;
            mean.pop_back();
            weight.pop_back();
            mean.back() = m;
            weight.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t b = 0; b < mean.size(); ++b) {
        for (int k = 0; k < static_cast<int>(weight[b]); ++k) out.push_back(mean[b]);
    }
    return out;
}

BudgetLookup budget_for_mse(const BudgetCurve& curve, double mse_target) {
    curve.validate();
    const auto& pts = curve.points;
    std::vector<double> mse;
    mse.reserve(pts.size());
    for (const auto& p : pts) mse.push_back(p.mse);
    const auto iso = isotonic_nonincreasing(mse);

    constexpr double kFloor = 1e-300;
    auto log_mse = [&](double v) { return std::log(std::max(v, kFloor)); };
    const double target = log_mse(mse_target);

    if (target >= log_mse(iso.front())) return {pts.front().budget, target > log_mse(iso.front())};
    if (target <= log_mse(iso.back())) return {pts.back().budget, target < log_mse(iso.back())};

    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double y0 = log_mse(iso[i]);
        const double y1 = log_mse(iso[i + 1]);
        if (target <= y0 && target >= y1) {
            if (y0 == y1) return {pts[i].budget, false};
            const double x0 = std::log(pts[i].budget);
            const double x1 = std::log(pts[i + 1].budget);
            const double frac = (y0 - target) / (y0 - y1);
            return {std::exp(x0 + frac * (x1 - x0)), false};
        }
    }
    return {pts.back().budget, true};
}

BudgetLookup effective_budget(const BudgetCurve& curve_base, double mse_target) {
    return budget_for_mse(curve_base, mse_target);
}

double cost_savings(const BudgetCurve& curve_pi, const BudgetCurve& curve_base, double mse_target) {
    return budget_for_mse(curve_base, mse_target).budget - budget_for_mse(curve_pi, mse_target).budget;
}

}  // namespace costeval

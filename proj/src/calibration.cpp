#include "costeval/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace costeval {

namespace {

constexpr double kLogitClip = 1e-6;
constexpr int kMaxNewtonIterations = 100;
constexpr double kGradientTolerance = 1e-8;

double logit(double g) {
    const double p = std::clamp(g, kLogitClip, 1.0 - kLogitClip);
    return std::log(p / (1.0 - p));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z), stable for large |z|.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double mean_nll(std::span<const double> x, std::span<const double> y, double a, double b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = a * x[i] + b;
        acc += softplus(z) - y[i] * z;
    }
    return acc / static_cast<double>(x.size());
}

}  // namespace

double PlattModel::operator()(double g) const { return sigmoid(a * logit(g) + b); }

PlattModel platt_fit(std::span<const LabeledScore> pairs) {
    std::vector<double> x, y;
    x.reserve(pairs.size());
    y.reserve(pairs.size());
    bool any_pos = false, any_neg = false;
    for (const auto& p : pairs) {
        if (p.h != 0.0 && p.h != 1.0) throw std::invalid_argument("Platt labels must be 0 or 1");
        x.push_back(logit(p.g));
        y.push_back(p.h);
        any_pos |= p.h == 1.0;
        any_neg |= p.h == 0.0;
    }
    if (!any_pos || !any_neg) throw std::invalid_argument("Platt scaling needs both positive and negative labels");

    const double n = static_cast<double>(x.size());
    double a = 1.0, b = 0.0;
    double loss = mean_nll(x, y, a, b);
    for (int iter = 0; iter < kMaxNewtonIterations; ++iter) {
        double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double p = sigmoid(a * x[i] + b);
            const double r = p - y[i];
            const double w = p * (1.0 - p);
            ga += r * x[i];
            gb += r;
            haa += w * x[i] * x[i];
            hab += w * x[i];
            hbb += w;
        }
        ga /= n, gb /= n, haa /= n, hab /= n, hbb /= n;
        if (std::hypot(ga, gb) < kGradientTolerance) return {a, b};

        // Small ridge keeps the 2x2 solve defined on near-separable data.
        const double ridge = 1e-12;
        haa += ridge, hbb += ridge;
        const double det = haa * hbb - hab * hab;
        double da = -(hbb * ga - hab * gb) / det;
        double db = -(haa * gb - hab * ga) / det;

        double step = 1.0;
        double next = mean_nll(x, y, a + da, b + db);
        while (!(next <= loss) && step > 1e-10) {
            step *= 0.5;
            next = mean_nll(x, y, a + step * da, b + step * db);
        }
        a += step * da;
        b += step * db;
        loss = next;
        if (!std::isfinite(a) || !std::isfinite(b)) break;
    }
    throw std::runtime_error("Platt scaling did not converge within 100 Newton iterations");
}

bool supports_platt(std::span<const Sample> samples) {
    bool any_pos = false, any_neg = false;
    for (const auto& s : samples) {
        if (!s.h || (*s.h != 0.0 && *s.h != 1.0)) return false;
        if (!(s.g >= 0.0 && s.g <= 1.0)) return false;
        any_pos |= *s.h == 1.0;
        any_neg |= *s.h == 0.0;
    }
    return any_pos && any_neg;
}

Sample SampleCalibration::apply(Sample s) const {
    if (!platt) return s;
    s.g = (*platt)(s.g);
    s.u_hat = s.g * (1.0 - s.g);
    return s;
}

FittedParams fit_policy_inputs(std::span<const Sample> annotated, const RaterCosts& costs) {
    if (annotated.size() < 2) throw std::invalid_argument("need at least two annotated samples");
    for (const auto& s : annotated) {
        if (!s.h) throw std::invalid_argument("every annotated sample needs a strong rating");
    }

    FittedParams out;
    if (supports_platt(annotated)) {
        std::vector<LabeledScore> pairs;
        pairs.reserve(annotated.size());
        for (const auto& s : annotated) pairs.push_back({s.g, *s.h});
        try {
            out.calibration.platt = platt_fit(pairs);
        } catch (const std::runtime_error&) {
            // Non-convergence (separable block): keep the raw scores.
            out.calibration.platt.reset();
        }
    }

    const double n = static_cast<double>(annotated.size());
    double mean_h = 0.0;
    for (const auto& s : annotated) mean_h += *s.h;
    mean_h /= n;

    double ss = 0.0, sq_err = 0.0;
    std::vector<double> u;
    u.reserve(annotated.size());
    for (const auto& raw : annotated) {
        const Sample s = out.calibration.apply(raw);
        ss += (*s.h - mean_h) * (*s.h - mean_h);
        sq_err += (*s.h - s.g) * (*s.h - s.g);
        u.push_back(s.u_hat);
    }

    out.params.costs = costs;
    out.params.var_h = ss / (n - 1.0);
    out.params.mse = sq_err / n;
    out.params.u = UncertaintyLaw::from_sample(u);
    return out;
}

BurnInEstimate estimate_params_burnin(std::span<const Sample> burn, const RaterCosts& costs) {
    auto fitted = fit_policy_inputs(burn, costs);
    BurnInEstimate est;
    est.n_b = burn.size();
    for (const auto& s : burn) est.theta_burn += *s.h;
    est.theta_burn /= static_cast<double>(burn.size());
    est.var_burn = fitted.params.var_h / static_cast<double>(burn.size());
    est.params = std::move(fitted.params);
    est.calibration = fitted.calibration;
    return est;
}

double policy_estimate_variance(const PolicyParams& params, const Policy& policy, double steps) {
    return std::max(0.0, error_of_policy(params, policy, steps));
}

double inverse_variance_combine(double theta1, double var1, double theta2, double var2) {
    if (!(var1 >= 0.0) || !(var2 >= 0.0)) throw std::invalid_argument("variances must be non-negative");
    if (!(var1 + var2 > 0.0)) throw std::invalid_argument("cannot combine two zero-variance estimates");
    return (var2 * theta1 + var1 * theta2) / (var1 + var2);
}

std::optional<double> power_tune_lambda(std::span<const TrialRecord> records) {
    double num = 0.0, den = 0.0;
    for (const auto& r : records) {
        const double g = r.sample.g;
        const double excess = 1.0 / r.pi_x - 1.0;
        double moment = g * g;
        if (r.xi) moment += (*r.sample.h * g - g * g) / r.pi_x;
        num += moment * excess;
        den += g * g * excess;
    }
    if (!(den > 0.0)) return std::nullopt;
    return num / den;
}

double power_tuned_estimate(std::span<const TrialRecord> records, double lambda) {
    if (records.empty()) throw std::invalid_argument("no records to re-estimate");
    double acc = 0.0;
    for (const auto& r : records) {
        const double lg = lambda * r.sample.g;
        acc += r.xi ? lg + (*r.sample.h - lg) / r.pi_x : lg;
    }
    return acc / static_cast<double>(records.size());
}

}  // namespace costeval

#include "costeval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "costeval/calibration.hpp"
#include "costeval/format.hpp"

namespace costeval {

std::string to_string(EstimationMode mode) {
    switch (mode) {
        case EstimationMode::Analytic: return "analytic";
        case EstimationMode::Transfer: return "transfer";
        case EstimationMode::BurnIn: return "burnin";
    }
    return "unknown";
}

EstimationMode estimation_mode_from_string(const std::string& name) {
    if (name == "analytic") return EstimationMode::Analytic;
    if (name == "transfer") return EstimationMode::Transfer;
    if (name == "burnin") return EstimationMode::BurnIn;
    throw ConfigError("unknown estimation mode '" + name + "'");
}

std::string to_string(StoppingRule rule) { return rule == StoppingRule::Budget ? "budget" : "horizon"; }

StoppingRule stopping_rule_from_string(const std::string& name) {
    if (name == "budget") return StoppingRule::Budget;
    if (name == "horizon") return StoppingRule::Horizon;
    throw ConfigError("unknown stopping rule '" + name + "'");
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
    if (synthetic.has_value() == dataset.has_value()) {
        throw ConfigError("configure exactly one source: a synthetic spec or a dataset");
    }
    if (synthetic) std::visit([](const auto& s) { s.validate(); }, *synthetic);
    if (budgets.empty()) throw ConfigError("budget grid is empty");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (i > 0 && !(budgets[i] > budgets[i - 1])) throw ConfigError("budgets must be strictly increasing");
        if (!(budgets[i] >= costs.weak() + costs.strong())) {
            throw ConfigError("every budget must cover one fully annotated step (c_g + c_h)");
        }
    }
    if (policies.empty()) throw ConfigError("no policies selected");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (mode == EstimationMode::BurnIn && burnin < 2) throw ConfigError("burn-in needs n_b >= 2");
    if (mode == EstimationMode::Transfer && dataset && !transfer) {
        throw ConfigError("transfer mode on a dataset needs a transfer dataset");
    }
    if (mode == EstimationMode::Transfer && synthetic && transfer_size < 2) {
        throw ConfigError("synthetic transfer block needs at least two samples");
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    nlohmann::json src;
    if (synthetic) {
        if (const auto* g = std::get_if<GaussianSpec>(&*synthetic)) {
            src = {{"family", "gaussian"}, {"nu", g->nu}, {"mu", g->mu}, {"eta", g->eta}};
        } else {
            const auto& b = std::get<BernoulliSpec>(*synthetic);
            src = {{"family", "bernoulli"}, {"nu", b.nu}, {"mu", b.mu}, {"eta", b.eta}};
        }
        src["transfer_size"] = transfer_size;
    } else {
        src["dataset"] = dataset->string();
        if (transfer) src["transfer"] = transfer->string();
        src["split_quartiles"] = split_quartiles;
        src["scale"] = scale == ScoreScale::Probability ? "probability" : "real";
    }
    j["source"] = src;
    j["costs"] = {{"c_g", costs.weak()}, {"c_h", costs.strong()}};
    j["budgets"] = budgets;
    std::vector<std::string> names;
    for (auto k : policies) names.push_back(to_string(k));
    j["policies"] = names;
    j["estimation"] = {{"mode", to_string(mode)}, {"n_b", burnin}};
    j["stopping"] = to_string(stopping);
    j["trials"] = trials;
    j["seed"] = seed;
    j["power_tuning"] = power_tuning;
    j["threads"] = threads;
    j["bootstrap_resamples"] = bootstrap_resamples;
    j["traces"] = traces;
    if (output) j["output"] = output->string();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        const auto& src = j.at("source");
        if (src.contains("family")) {
            const auto family = src.at("family").get<std::string>();
            const double nu = src.at("nu").get<double>();
            const double mu = src.at("mu").get<double>();
            const double eta = src.value("eta", 0.0);
            if (family == "gaussian") c.synthetic = GaussianSpec{nu, mu, eta};
            else if (family == "bernoulli") c.synthetic = BernoulliSpec{nu, mu, eta};
            else throw ConfigError("unknown synthetic family '" + family + "'");
            c.transfer_size = src.value("transfer_size", c.transfer_size);
        } else {
            c.dataset = src.at("dataset").get<std::string>();
            if (src.contains("transfer")) c.transfer = src.at("transfer").get<std::string>();
            c.split_quartiles = src.value("split_quartiles", false);
            const auto scale = src.value("scale", std::string("probability"));
            if (scale == "probability") c.scale = ScoreScale::Probability;
            else if (scale == "real") c.scale = ScoreScale::Real;
            else throw ConfigError("unknown score scale '" + scale + "'");
        }
        if (j.contains("costs")) {
            const auto& cj = j.at("costs");
            const double c_h = cj.value("c_h", 1.0);
            // c_g may be given directly or as the ratio c_g / c_h.
            const double c_g = cj.contains("c_g") ? cj.at("c_g").get<double>() : cj.at("ratio").get<double>() * c_h;
            c.costs = RaterCosts(c_g, c_h);
        }
        c.budgets = j.at("budgets").get<std::vector<double>>();
        if (j.contains("policies")) {
            c.policies.clear();
            for (const auto& name : j.at("policies")) c.policies.push_back(policy_kind_from_string(name.get<std::string>()));
        }
        if (j.contains("estimation")) {
            const auto& e = j.at("estimation");
            c.mode = estimation_mode_from_string(e.value("mode", std::string("analytic")));
            c.burnin = e.value("n_b", c.burnin);
        }
        c.stopping = stopping_rule_from_string(j.value("stopping", std::string("budget")));
        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
        c.power_tuning = j.value("power_tuning", c.power_tuning);
        c.threads = j.value("threads", c.threads);
        c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
        c.traces = j.value("traces", c.traces);
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

std::vector<double> log_budget_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ConfigError("budget grid needs 0 < lo < hi and count >= 2");
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        grid[i] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

const PolicyRun* ExperimentResult::find(PolicyKind kind) const {
    for (const auto& r : runs) {
        if (r.kind == kind) return &r;
    }
    return nullptr;
}

// ---------------------------------------------------------------- runner

namespace {

constexpr std::uint64_t kTransferStream = 0x7472616e73666572ULL;
constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    const auto workers = std::min(threads, n);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < n && !failed; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

class Runner {
  public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg) {
        if (cfg.dataset) {
            eval_ = load_dataset(*cfg.dataset, cfg.scale);
            if (cfg.split_quartiles) eval_ = split_quartiles(*eval_);
            theta_star_ = eval_->theta_star;
            replay_ = replay_sampler(*eval_);
        } else {
            theta_star_ = synthetic_mean(*cfg.synthetic);
        }

        if (wants(PolicyKind::Oracle)) {
            auto params = eval_ ? oracle_params(*eval_, cfg.costs) : oracle_params(*cfg.synthetic, cfg.costs);
            oracle_ = make_policy(PolicyKind::Oracle, params);
            oracle_params_ = std::move(params);
        }

        switch (cfg.mode) {
            case EstimationMode::Analytic:
                fixed_params_ = eval_ ? empirical_params(*eval_, cfg.costs) : analytic_params(*cfg.synthetic, cfg.costs);
                break;
            case EstimationMode::Transfer: {
                FittedParams fit;
                if (cfg.transfer) {
                    auto train = load_dataset(*cfg.transfer, cfg.scale);
                    if (cfg.split_quartiles) train = split_quartiles(train);
                    fit = transfer_split(train, cfg.costs);
                } else {
                    auto rng = trial_rng(cfg.seed, {kTransferStream});
                    std::vector<Sample> block;
                    for (std::size_t i = 0; i < cfg.transfer_size; ++i) block.push_back(synthetic_draw(*cfg.synthetic, rng));
                    fit = fit_policy_inputs(block, cfg.costs);
                }
                fixed_params_ = fit.params;
                calibration_ = fit.calibration;
                break;
            }
            case EstimationMode::BurnIn: break;
        }
    }

    double theta_star() const { return theta_star_; }

    std::optional<Policy> fixed_policy(PolicyKind kind) const {
        if (kind == PolicyKind::Oracle) return oracle_;
        if (!fixed_params_) return std::nullopt;
        return make_policy(kind, *fixed_params_);
    }

    /// One trial; returns the (possibly combined) estimate.
    double trial(PolicyKind kind, const std::optional<Policy>& fixed, double budget, Rng& rng,
                 std::vector<TrialRecord>* trace) const {
        SampleSource raw = eval_ ? replay_ : synthetic_source(*cfg_.synthetic);

        std::optional<BurnInEstimate> burn;
        Policy policy = fixed.value_or(Policy::base());
        SampleCalibration calibration = calibration_;
        if (cfg_.mode == EstimationMode::BurnIn) {
            std::vector<Sample> block;
            block.reserve(cfg_.burnin);
            for (std::size_t i = 0; i < cfg_.burnin; ++i) block.push_back(*raw(rng));
            burn = estimate_params_burnin(block, cfg_.costs);
            calibration = burn->calibration;
            if (kind != PolicyKind::Oracle) policy = make_policy(kind, burn->params);
        }
        if (kind == PolicyKind::Oracle) calibration = {};

        SampleSource source = raw;
        if (calibration.platt) {
            source = [raw, calibration](Rng& r) -> std::optional<Sample> {
                auto s = raw(r);
                if (s) s = calibration.apply(*s);
                return s;
            };
        }
        const bool keep = cfg_.power_tuning || trace != nullptr;
        const ProbabilityFn probability = [&policy](const Sample& s) { return policy.probability(s); };
        TrialResult result;
        if (cfg_.stopping == StoppingRule::Horizon) {
            const PolicyParams* params = kind == PolicyKind::Oracle ? &*oracle_params_
                                         : burn                     ? &burn->params
                                         : fixed_params_            ? &*fixed_params_
                                                                    : nullptr;
            const double mean_pi = params ? policy_moments(policy, params->u).mean_pi : 1.0;
            result = run_trial_steps(source, probability, cfg_.costs, horizon_steps(cfg_.costs, mean_pi, budget), rng,
                                     keep);
        } else {
            result = run_trial(source, probability, cfg_.costs, budget, rng, keep);
        }

        double estimate = result.estimate;
        if (cfg_.power_tuning) {
            const double lambda = power_tune_lambda(result.records).value_or(1.0);
            estimate = power_tuned_estimate(result.records, lambda);
        }
        if (trace) *trace = std::move(result.records);

        if (burn) {
            const auto& params = kind == PolicyKind::Oracle ? *oracle_params_ : burn->params;
            const double var_pi = policy_estimate_variance(params, policy, static_cast<double>(result.steps));
            if (burn->var_burn + var_pi > 0.0) {
                estimate = inverse_variance_combine(burn->theta_burn, burn->var_burn, estimate, var_pi);
            } else {
                const double nb = static_cast<double>(burn->n_b);
                const double nt = static_cast<double>(result.steps);
                estimate = (nb * burn->theta_burn + nt * estimate) / (nb + nt);
            }
        }
        return estimate;
    }

  private:
    bool wants(PolicyKind k) const {
        return std::find(cfg_.policies.begin(), cfg_.policies.end(), k) != cfg_.policies.end();
    }

    const ExperimentConfig& cfg_;
    std::optional<ReplayDataset> eval_;
    SampleSource replay_;
    double theta_star_ = 0.0;
    std::optional<PolicyParams> fixed_params_;
    SampleCalibration calibration_;
    std::optional<Policy> oracle_;
    std::optional<PolicyParams> oracle_params_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    Runner runner(config);

    ExperimentResult result;
    result.config = config;
    result.theta_star = runner.theta_star();

    for (auto kind : config.policies) {
        PolicyRun run;
        run.kind = kind;
        run.policy = runner.fixed_policy(kind);
        run.curve.policy = to_string(kind);
        const auto kind_id = static_cast<std::uint64_t>(kind);

        for (std::size_t b = 0; b < config.budgets.size(); ++b) {
            const double budget = config.budgets[b];
            std::vector<double> estimates(config.trials);
            std::vector<TrialRecord> trace;
            parallel_for(config.trials, config.threads, [&](std::size_t t) {
                auto rng = trial_rng(config.seed, {kind_id, b, t});
                const bool want_trace = config.traces && t == 0;
                estimates[t] = runner.trial(kind, run.policy, budget, rng, want_trace ? &trace : nullptr);
            });

            CurvePoint point;
            point.budget = budget;
            point.mse = mse_over_trials(estimates, result.theta_star);
            if (estimates.size() >= 2) {
                auto rng = trial_rng(config.seed, {kind_id, b, kBootstrapStream});
                const auto ci = bootstrap_ci(estimates, result.theta_star, rng, 0.95, config.bootstrap_resamples);
                point.ci_low = std::min(ci.low, point.mse);
                point.ci_high = std::max(ci.high, point.mse);
            } else {
                point.ci_low = point.ci_high = point.mse;
            }
            run.curve.points.push_back(point);
            run.estimates.push_back(std::move(estimates));
            if (config.traces) run.traces.push_back(std::move(trace));
        }
        result.runs.push_back(std::move(run));
    }

    const PolicyRun* base = result.find(PolicyKind::Base);
    for (auto& run : result.runs) {
        for (const auto& p : run.curve.points) {
            if (base) {
                const auto eff = effective_budget(base->curve, p.mse);
                run.effective_budget.push_back(eff.budget);
                run.effective_budget_saturated.push_back(eff.saturated);
                run.cost_savings.push_back(cost_savings(run.curve, base->curve, p.mse));
            } else {
                run.effective_budget.push_back(std::numeric_limits<double>::quiet_NaN());
                run.effective_budget_saturated.push_back(false);
                run.cost_savings.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------- output

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void write_curves_csv(std::ostream& out, const ExperimentResult& result) {
    out << "policy,budget,mse,ci_low,ci_high,effective_budget,cost_savings\n";
    for (const auto& run : result.runs) {
        for (std::size_t i = 0; i < run.curve.points.size(); ++i) {
            const auto& p = run.curve.points[i];
            out << run.curve.policy << ',' << cell(p.budget) << ',' << cell(p.mse) << ',' << cell(p.ci_low) << ','
                << cell(p.ci_high) << ',' << cell(run.effective_budget[i]) << ',' << cell(run.cost_savings[i])
                << '\n';
        }
    }
}

nlohmann::json summary_json(const ExperimentResult& result) {
    nlohmann::json j;
    j["config"] = result.config.to_json();
    j["theta_star"] = result.theta_star;
    nlohmann::json policies = nlohmann::json::object();
    for (const auto& run : result.runs) {
        nlohmann::json pj;
        if (run.policy) pj["policy"] = run.policy->to_json();
        nlohmann::json points = nlohmann::json::array();
        for (std::size_t i = 0; i < run.curve.points.size(); ++i) {
            const auto& p = run.curve.points[i];
            nlohmann::json row{{"budget", p.budget}, {"mse", p.mse}, {"ci_low", p.ci_low}, {"ci_high", p.ci_high}};
            if (!std::isnan(run.effective_budget[i])) {
                row["effective_budget"] = run.effective_budget[i];
                row["effective_budget_saturated"] = static_cast<bool>(run.effective_budget_saturated[i]);
                row["cost_savings"] = run.cost_savings[i];
            }
            points.push_back(row);
        }
        pj["points"] = points;
        policies[run.curve.policy] = pj;
    }
    j["policies"] = policies;
    return j;
}

void emit_results(const ExperimentResult& result, const std::filesystem::path& dir) {
    if (result.runs.empty()) throw std::invalid_argument("no curves to emit");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

    std::ofstream csv(dir / "curves.csv");
    if (!csv) throw std::runtime_error("cannot write '" + (dir / "curves.csv").string() + "'");
    write_curves_csv(csv, result);

    std::ofstream js(dir / "summary.json");
    if (!js) throw std::runtime_error("cannot write '" + (dir / "summary.json").string() + "'");
    js << summary_json(result).dump(2) << '\n';

    bool any_trace = false;
    for (const auto& run : result.runs) any_trace |= !run.traces.empty();
    if (any_trace) {
        std::filesystem::create_directories(dir / "traces");
        for (const auto& run : result.runs) {
            for (std::size_t b = 0; b < run.traces.size(); ++b) {
                std::ofstream tr(dir / "traces" / (run.curve.policy + "_b" + std::to_string(b) + ".csv"));
                write_trace_csv(tr, run.traces[b]);
            }
        }
    }
}

}  // namespace costeval

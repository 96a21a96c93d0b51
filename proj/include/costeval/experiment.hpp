#pragma once

// Policy x budget x trial sweeps over synthetic generators or replay datasets.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "costeval/core.hpp"
#include "costeval/data.hpp"
#include "costeval/metrics.hpp"
#include "costeval/policies.hpp"
#include "costeval/synthetic.hpp"

namespace costeval {

enum class EstimationMode { Analytic, Transfer, BurnIn };

std::string to_string(EstimationMode mode);
EstimationMode estimation_mode_from_string(const std::string& name);

/// Budget: stop before the weak query that would exceed B (the default).
/// Horizon: run floor(B / (c_h E[pi] + c_g)) steps, with E[pi] from the policy's parameters.
enum class StoppingRule { Budget, Horizon };

std::string to_string(StoppingRule rule);
StoppingRule stopping_rule_from_string(const std::string& name);

struct ExperimentConfig {
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> transfer;
    bool split_quartiles = false;
    ScoreScale scale = ScoreScale::Probability;

    RaterCosts costs{0.1, 1.0};
    std::vector<double> budgets;
    std::vector<PolicyKind> policies{PolicyKind::Base, PolicyKind::Random, PolicyKind::Active};
    EstimationMode mode = EstimationMode::Analytic;
    std::size_t burnin = 200;
    StoppingRule stopping = StoppingRule::Budget;
    std::size_t transfer_size = 1000;  // synthetic transfer block
    std::size_t trials = 2000;
    std::uint64_t seed = 0;
    bool power_tuning = false;
    std::size_t threads = 1;
    std::size_t bootstrap_resamples = 2000;
    bool traces = false;
    std::optional<std::filesystem::path> output;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

struct PolicyRun {
    PolicyKind kind = PolicyKind::Base;
    /// Policy built once up front (analytic and transfer modes).
    std::optional<Policy> policy;
    BudgetCurve curve;
    std::vector<double> effective_budget;
    std::vector<bool> effective_budget_saturated;
    std::vector<double> cost_savings;
    /// Per-budget trial estimates, indexed by trial.
    std::vector<std::vector<double>> estimates;
    /// Trace of trial 0 per budget, when requested.
    std::vector<std::vector<TrialRecord>> traces;
};

struct ExperimentResult {
    ExperimentConfig config;
    double theta_star = 0.0;
    std::vector<PolicyRun> runs;

    const PolicyRun* find(PolicyKind kind) const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes curves.csv and summary.json (plus traces/ when present) under `dir`.
void emit_results(const ExperimentResult& result, const std::filesystem::path& dir);

void write_curves_csv(std::ostream& out, const ExperimentResult& result);
nlohmann::json summary_json(const ExperimentResult& result);

/// Logarithmic grid of `count` budgets between lo and hi.
std::vector<double> log_budget_grid(double lo, double hi, std::size_t count);

}  // namespace costeval

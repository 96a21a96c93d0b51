#pragma once

// Replay of precomputed rater outputs: CSV ingestion, with-replacement
// resampling, transfer fitting and the easy/hard quartile filter.

#include <filesystem>
#include <string>
#include <vector>

#include "costeval/calibration.hpp"
#include "costeval/core.hpp"
#include "costeval/policies.hpp"

namespace costeval {

/// How the g column is interpreted; Probability enforces g in [0, 1].
enum class ScoreScale { Probability, Real };

struct ReplayRow {
    std::string x_id;
    double g = 0.0;
    double h = 0.0;
    double u_hat = 0.0;
    bool u_defaulted = false;  // u_hat was filled with g(1 - g)
};

struct ReplayDataset {
    std::vector<ReplayRow> rows;
    double theta_star = 0.0;
    ScoreScale scale = ScoreScale::Probability;

    std::size_t size() const noexcept { return rows.size(); }
    /// Sample view of row i; x_id is the row index.
    Sample sample(std::size_t i) const;
    std::vector<Sample> samples() const;
    bool all_u_defaulted() const;
};

double mean_h(const std::vector<ReplayRow>& rows);

/// Builds a dataset from rows, filling defaults and computing theta_star.
ReplayDataset make_dataset(std::vector<ReplayRow> rows, ScoreScale scale = ScoreScale::Probability);

/// Reads `x_id,g,h[,u_hat]` CSV plus the optional `<stem>.json` sidecar.
ReplayDataset load_dataset(const std::filesystem::path& path, ScoreScale scale = ScoreScale::Probability);

/// Writes the CSV and, when requested, the sidecar with theta_star.
void write_dataset(const ReplayDataset& ds, const std::filesystem::path& path, bool with_sidecar = true);

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Uniform draws with replacement; never exhausts.
SampleSource replay_sampler(const ReplayDataset& ds);

/// Draws a run of `budget` can consume at most.
std::uint64_t minimum_draws(double budget, const RaterCosts& costs);

/// Platt model and policy parameters estimated on a related, fully annotated dataset.
FittedParams transfer_split(const ReplayDataset& train, const RaterCosts& costs);

/// Exact parameters of the with-replacement replay law (population moments, given u_hat).
PolicyParams empirical_params(const ReplayDataset& ds, const RaterCosts& costs);

/// Replay-law parameters with u = (h - g)^2, for the oracle policy.
PolicyParams oracle_params(const ReplayDataset& ds, const RaterCosts& costs);

/// Keeps rows in the bottom and top quartiles of u_hat.
ReplayDataset split_quartiles(const ReplayDataset& ds);

}  // namespace costeval

#include "costeval/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "costeval/format.hpp"

namespace costeval {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

Sample ReplayDataset::sample(std::size_t i) const {
    const auto& r = rows.at(i);
    Sample s;
    s.x_id = i;
    s.g = r.g;
    s.h = r.h;
    s.u_hat = r.u_hat;
    return s;
}

std::vector<Sample> ReplayDataset::samples() const {
    std::vector<Sample> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(sample(i));
    return out;
}

bool ReplayDataset::all_u_defaulted() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReplayRow& r) { return r.u_defaulted; });
}

double mean_h(const std::vector<ReplayRow>& rows) {
    // Sorted summation makes the mean independent of row order.
    std::vector<double> h;
    h.reserve(rows.size());
    for (const auto& r : rows) h.push_back(r.h);
    std::sort(h.begin(), h.end());
    double acc = 0.0;
    for (double v : h) acc += v;
    return acc / static_cast<double>(h.size());
}

ReplayDataset make_dataset(std::vector<ReplayRow> rows, ScoreScale scale) {
    if (rows.empty()) throw DataError("dataset has no rows");
    for (auto& r : rows) {
        if (!std::isfinite(r.g) || !std::isfinite(r.h)) throw DataError("non-finite rating in row '" + r.x_id + "'");
        if (scale == ScoreScale::Probability && !(r.g >= 0.0 && r.g <= 1.0)) {
            throw DataError("g outside [0, 1] in row '" + r.x_id + "'");
        }
        if (r.u_defaulted) {
            if (scale != ScoreScale::Probability) {
                throw DataError("u_hat missing in row '" + r.x_id + "' and g is not a probability");
            }
            r.u_hat = r.g * (1.0 - r.g);
        }
        if (!(r.u_hat >= 0.0) || !std::isfinite(r.u_hat)) throw DataError("negative u_hat in row '" + r.x_id + "'");
    }
    ReplayDataset ds;
    ds.scale = scale;
    ds.theta_star = mean_h(rows);
    ds.rows = std::move(rows);
    return ds;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

ReplayDataset load_dataset(const std::filesystem::path& path, ScoreScale scale) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset '" + path.string() + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    int col_id = -1, col_g = -1, col_h = -1, col_u = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        const auto name = trim(header[i]);
        if (name == "x_id") col_id = i;
        else if (name == "g") col_g = i;
        else if (name == "h") col_h = i;
        else if (name == "u_hat") col_u = i;
    }
    if (col_id < 0 || col_g < 0 || col_h < 0) throw DataError("dataset header must contain x_id, g and h");

    std::vector<ReplayRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        const int needed = std::max({col_id, col_g, col_h});
        if (static_cast<int>(cells.size()) <= needed) {
            throw DataError("line " + std::to_string(line_no) + ": missing columns");
        }
        ReplayRow r;
        r.x_id = trim(cells[col_id]);
        if (!parse_double(cells[col_g], r.g) || !parse_double(cells[col_h], r.h)) {
            throw DataError("line " + std::to_string(line_no) + ": g and h must be numbers");
        }
        const std::string u_cell = (col_u >= 0 && col_u < static_cast<int>(cells.size())) ? trim(cells[col_u]) : "";
        if (u_cell.empty()) {
            r.u_defaulted = true;
        } else if (!parse_double(u_cell, r.u_hat)) {
            throw DataError("line " + std::to_string(line_no) + ": u_hat must be a number");
        }
        rows.push_back(std::move(r));
    }

    auto ds = make_dataset(std::move(rows), scale);

    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream sj(side);
        nlohmann::json meta;
        try {
            sj >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed sidecar '" + side.string() + "': " + e.what());
        }
        if (meta.contains("theta_star")) {
            const double declared = meta.at("theta_star").get<double>();
            if (std::abs(declared - ds.theta_star) > 1e-9 * std::max(1.0, std::abs(ds.theta_star))) {
                throw DataError("sidecar theta_star " + format_double(declared) + " disagrees with mean(h) = " +
                                format_double(ds.theta_star));
            }
        }
    }
    return ds;
}

void write_dataset(const ReplayDataset& ds, const std::filesystem::path& path, bool with_sidecar) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
    out << "x_id,g,h,u_hat\n";
    for (const auto& r : ds.rows) {
        out << r.x_id << ',' << format_double(r.g) << ',' << format_double(r.h) << ',';
        if (!r.u_defaulted) out << format_double(r.u_hat);
        out << '\n';
    }
    if (with_sidecar) {
        std::ofstream side(sidecar_path(path));
        nlohmann::json meta{{"theta_star", ds.theta_star}, {"notes", "rows: " + std::to_string(ds.size())}};
        side << meta.dump(2) << '\n';
    }
}

SampleSource replay_sampler(const ReplayDataset& ds) {
    if (ds.rows.empty()) throw DataError("cannot resample an empty dataset");
    auto samples = std::make_shared<const std::vector<Sample>>(ds.samples());
    return [samples](Rng& rng) -> std::optional<Sample> {
        std::uniform_int_distribution<std::size_t> pick(0, samples->size() - 1);
        return (*samples)[pick(rng)];
    };
}

std::uint64_t minimum_draws(double budget, const RaterCosts& costs) {
    return static_cast<std::uint64_t>(std::ceil(budget / costs.weak()));
}

FittedParams transfer_split(const ReplayDataset& train, const RaterCosts& costs) {
    const auto samples = train.samples();
    return fit_policy_inputs(samples, costs);
}

PolicyParams empirical_params(const ReplayDataset& ds, const RaterCosts& costs) {
    const double n = static_cast<double>(ds.size());
    double ss = 0.0, sq = 0.0;
    std::vector<double> u;
    u.reserve(ds.size());
    for (const auto& r : ds.rows) {
        ss += (r.h - ds.theta_star) * (r.h - ds.theta_star);
        sq += (r.h - r.g) * (r.h - r.g);
        u.push_back(r.u_hat);
    }
    PolicyParams p;
    p.costs = costs;
    p.var_h = ss / n;
    p.mse = sq / n;
    p.u = UncertaintyLaw::from_sample(u);
    return p;
}

PolicyParams oracle_params(const ReplayDataset& ds, const RaterCosts& costs) {
    PolicyParams p = empirical_params(ds, costs);
    std::vector<double> u;
    u.reserve(ds.size());
    for (const auto& r : ds.rows) u.push_back((r.h - r.g) * (r.h - r.g));
    p.u = UncertaintyLaw::from_sample(u);
    p.realized_errors = true;
    return p;
}

ReplayDataset split_quartiles(const ReplayDataset& ds) {
    std::vector<double> u;
    u.reserve(ds.size());
    for (const auto& r : ds.rows) u.push_back(r.u_hat);
    std::sort(u.begin(), u.end());
    const auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(u.size() - 1)));
        return u[idx];
    };
    const double lo = at(0.25);
    const double hi = at(0.75);
    std::vector<ReplayRow> kept;
    for (const auto& r : ds.rows) {
        if (r.u_hat <= lo || r.u_hat >= hi) kept.push_back(r);
    }
    return make_dataset(std::move(kept), ds.scale);
}

}  // namespace costeval

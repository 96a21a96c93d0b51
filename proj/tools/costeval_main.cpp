// costeval: budgeted weak/strong rater evaluation experiments.
//
//   costeval simulate --config configs/gaussian.json [--trials N] [--seed S] [--output DIR]
//   costeval replay   --dataset data.csv [--transfer other.csv] [--split-quartiles] --cg 0.1 --budgets 10,20,40
//   costeval design   --input strata.csv [--output q_star.csv]
//   costeval policy   --var-h 1 --mse 0.2 --cg 0.1 [--family gaussian --eta 0.2 | --u-file u.txt] [--budget B]
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "costeval/core.hpp"
#include "costeval/experiment.hpp"
#include "costeval/format.hpp"
#include "costeval/policies.hpp"
#include "costeval/sampling_design.hpp"
#include "costeval/synthetic.hpp"

using namespace costeval;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Overrides {
    std::string config;
    std::string dataset;
    std::string transfer;
    bool split_quartiles = false;
    std::string scale;
    std::string family;
    double nu = 0.0, mu = 0.0, eta = -1.0;
    double c_g = -1.0, c_h = 1.0;
    std::vector<double> budgets;
    std::vector<std::string> policies;
    std::string mode;
    std::string stopping;
    std::size_t n_b = 0;
    std::size_t trials = 0;
    std::optional<std::uint64_t> seed;
    bool power_tuning = false;
    std::size_t threads = 0;
    bool traces = false;
    std::string output;
};

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config");
    cmd->add_option("--cg", o.c_g, "weak-rater cost (c_h defaults to 1)");
    cmd->add_option("--ch", o.c_h, "strong-rater cost");
    cmd->add_option("--budgets", o.budgets, "budget grid")->delimiter(',');
    cmd->add_option("--policies", o.policies, "subset of base,random,active,oracle")->delimiter(',');
    cmd->add_option("--mode", o.mode, "analytic | transfer | burnin");
    cmd->add_option("--stopping", o.stopping, "budget (stop at the budget) | horizon (fixed step count)");
    cmd->add_option("--n-b", o.n_b, "burn-in size");
    cmd->add_option("--trials", o.trials, "trials per (policy, budget)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_flag("--power-tuning", o.power_tuning, "re-estimate with the power-tuned weak rater");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_flag("--traces", o.traces, "write the trace of trial 0 per budget");
    cmd->add_option("--output", o.output, "output directory");
}

ExperimentConfig build_config(const Overrides& o, bool replay) {
    nlohmann::json j = o.config.empty() ? nlohmann::json::object() : read_json_file(o.config);
    if (replay && !o.dataset.empty()) {
        j["source"] = {{"dataset", o.dataset}};
        if (!o.transfer.empty()) j["source"]["transfer"] = o.transfer;
    }
    if (!replay && !o.family.empty()) {
        j["source"] = {{"family", o.family}, {"nu", o.nu}, {"mu", o.mu}, {"eta", std::max(o.eta, 0.0)}};
    }
    if (!j.contains("source")) throw ConfigError(replay ? "replay needs --dataset or --config" : "simulate needs --config or --family");
    if (replay && j["source"].contains("family")) throw ConfigError("replay needs a dataset source");
    if (!replay && !j["source"].contains("family")) throw ConfigError("simulate needs a synthetic source");
    if (o.split_quartiles) j["source"]["split_quartiles"] = true;
    if (!o.scale.empty()) j["source"]["scale"] = o.scale;
    if (o.c_g > 0.0) j["costs"] = {{"c_g", o.c_g}, {"c_h", o.c_h}};
    if (!o.budgets.empty()) j["budgets"] = o.budgets;
    if (!j.contains("budgets")) {
        const double unit = j.contains("costs") ? j["costs"].value("c_h", 1.0) : 1.0;
        j["budgets"] = log_budget_grid(10.0 * unit, 1000.0 * unit, 9);
    }
    if (!o.policies.empty()) j["policies"] = o.policies;
    if (!o.mode.empty()) j["estimation"]["mode"] = o.mode;
    if (!o.stopping.empty()) j["stopping"] = o.stopping;
    if (o.n_b > 0) j["estimation"]["n_b"] = o.n_b;
    if (o.trials > 0) j["trials"] = o.trials;
    if (o.seed) j["seed"] = *o.seed;
    if (o.power_tuning) j["power_tuning"] = true;
    if (o.threads > 0) j["threads"] = o.threads;
    if (o.traces) j["traces"] = true;
    if (!o.output.empty()) j["output"] = o.output;
    return ExperimentConfig::from_json(j);
}

int run_sweep(const Overrides& o, bool replay) {
    const auto cfg = build_config(o, replay);
    const auto result = run_experiment(cfg);
    const auto dir = cfg.output.value_or("costeval_out");
    emit_results(result, dir);
    write_curves_csv(std::cout, result);
    std::cerr << "wrote " << (dir / "curves.csv").string() << " and " << (dir / "summary.json").string() << '\n';
    return 0;
}

// Strata table: x,p,nu  or  x,p,h2,u,pi
int run_design(const std::string& input, const std::string& output) {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open strata table '" + input + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
            header.push_back(c);
        }
    }
    auto col = [&](const std::string& name) -> int {
        for (int i = 0; i < static_cast<int>(header.size()); ++i)
            if (header[i] == name) return i;
        return -1;
    };
    const int cx = col("x"), cp = col("p"), cnu = col("nu"), ch2 = col("h2"), cu = col("u"), cpi = col("pi");
    if (cx < 0 || cp < 0 || (cnu < 0 && (ch2 < 0 || cu < 0 || cpi < 0))) {
        throw DataError("strata table needs columns x,p and either nu or h2,u,pi");
    }

    std::vector<std::string> ids;
    std::vector<double> p, nu;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        auto num = [&](int i) {
            double v = 0.0;
            if (i >= static_cast<int>(cells.size()) || !parse_double(cells[i], v)) {
                throw DataError("strata table: bad number in row '" + line + "'");
            }
            return v;
        };
        ids.push_back(cells.at(cx));
        p.push_back(num(cp));
        nu.push_back(cnu >= 0 ? num(cnu) : nu_of_x(num(cpi), num(ch2), num(cu)));
    }
    InputDesign design;
    try {
        design = optimal_input_distribution(p, nu);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }

    std::ofstream file;
    if (!output.empty()) {
        file.open(output);
        if (!file) throw DataError("cannot write '" + output + "'");
    }
    std::ostream& out = output.empty() ? std::cout : file;
    out << "x,p,nu,q_star\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << format_double(p[i]) << ',' << format_double(nu[i]) << ','
            << format_double(design.q_star[i]) << '\n';
    }
    return 0;
}

struct PolicyArgs {
    double var_h = -1.0, mse = -1.0, c_g = -1.0, c_h = 1.0;
    std::string family;
    double eta = 0.0;
    std::string u_file;
    double budget = 0.0;
};

int run_policy(const PolicyArgs& a) {
    const RaterCosts costs(a.c_g, a.c_h);
    PolicyParams params;
    if (!a.family.empty()) {
        SyntheticSpec spec = a.family == "bernoulli" ? SyntheticSpec{BernoulliSpec{a.var_h, a.mse, a.eta}}
                                                     : SyntheticSpec{GaussianSpec{a.var_h, a.mse, a.eta}};
        if (a.family != "gaussian" && a.family != "bernoulli") throw ConfigError("unknown family '" + a.family + "'");
        params = analytic_params(spec, costs);
    } else {
        if (a.var_h < 0.0 || a.mse < 0.0) throw ConfigError("--var-h and --mse are required");
        params.costs = costs;
        params.var_h = a.var_h;
        params.mse = a.mse;
        if (!a.u_file.empty()) {
            std::ifstream in(a.u_file);
            if (!in) throw DataError("cannot open '" + a.u_file + "'");
            std::vector<double> u;
            std::string tok;
            while (in >> tok) {
                double v = 0.0;
                if (!parse_double(tok, v) || v < 0.0) throw DataError("u file holds a non-numeric or negative value");
                u.push_back(v);
            }
            params.u = UncertaintyLaw::from_sample(u);
        } else {
            params.u = UncertaintyLaw::point_mass(a.mse);
        }
    }

    nlohmann::json out;
    const auto base = Policy::base();
    for (auto kind : {PolicyKind::Base, PolicyKind::Random, PolicyKind::Active}) {
        const auto policy = make_policy(kind, params);
        auto pj = policy.to_json();
        const auto m = policy_moments(policy, params.u);
        pj["mean_pi"] = m.mean_pi;
        pj["error_ratio_vs_base"] = error_ratio(policy, base, params);
        out[to_string(kind)] = pj;
    }
    if (a.budget > 0.0) out["random_integer_time"] = {{"budget", a.budget}, {"p", optimal_random_rate_integer(params, a.budget)}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cost-optimal mixing of weak and strong raters"};
    app.require_subcommand(1);

    Overrides sim;
    auto* simulate = app.add_subcommand("simulate", "synthetic sweeps");
    add_common(simulate, sim);
    simulate->add_option("--family", sim.family, "gaussian | bernoulli");
    simulate->add_option("--nu", sim.nu, "Var(H)");
    simulate->add_option("--mu", sim.mu, "MSE(H, G)");
    simulate->add_option("--eta", sim.eta, "Var(U)");

    Overrides rep;
    auto* replay = app.add_subcommand("replay", "runs over a replay dataset");
    add_common(replay, rep);
    replay->add_option("--dataset", rep.dataset, "CSV with x_id,g,h[,u_hat]");
    replay->add_option("--transfer", rep.transfer, "related dataset for parameter transfer");
    replay->add_flag("--split-quartiles", rep.split_quartiles, "keep the bottom and top quartiles of u_hat");
    replay->add_option("--scale", rep.scale, "probability | real");

    std::string design_in, design_out;
    auto* design = app.add_subcommand("design", "optimal input sampling table");
    design->add_option("--input", design_in, "CSV with x,p,nu or x,p,h2,u,pi")->required();
    design->add_option("--output", design_out, "output CSV (stdout when omitted)");

    PolicyArgs pol;
    auto* policy = app.add_subcommand("policy", "print the optimal policies for given parameters");
    policy->add_option("--var-h", pol.var_h, "Var(H)")->required();
    policy->add_option("--mse", pol.mse, "MSE(H, G)")->required();
    policy->add_option("--cg", pol.c_g, "weak-rater cost")->required();
    policy->add_option("--ch", pol.c_h, "strong-rater cost");
    policy->add_option("--family", pol.family, "gaussian | bernoulli: analytic U law");
    policy->add_option("--eta", pol.eta, "Var(U) for --family");
    policy->add_option("--u-file", pol.u_file, "whitespace-separated sample of u");
    policy->add_option("--budget", pol.budget, "also report the integer-time fixed rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate) return run_sweep(sim, false);
        if (*replay) return run_sweep(rep, true);
        if (*design) return run_design(design_in, design_out);
        if (*policy) return run_policy(pol);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

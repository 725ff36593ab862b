// Command-line front end: planning, evaluation, simulation, benchmark
// reproduction, and regret-vs-boundary sweeps.
//
// Exit codes: 0 success, 2 commitment infeasibility, 1 usage error.

#include "ccplan/domains.hpp"
#include "ccplan/eval.hpp"
#include "ccplan/planners.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write file: " + path);
    out << text;
}

/// Loads --env FILE or --builtin NAME. Builtins: twin-states (uses
/// --horizon), tmaze, theorem3, observation4.
std::pair<ccplan::Environment, ccplan::Commitment>
load_instance(const std::string& env_file, const std::string& builtin, int horizon) {
    if (!env_file.empty() && !builtin.empty())
        throw UsageError("--env and --builtin are mutually exclusive");
    if (!env_file.empty()) return ccplan::parse_environment(read_file(env_file));
    if (builtin == "twin-states") return ccplan::twin_states(horizon);
    if (builtin == "tmaze") return ccplan::slippery_tmaze();
    if (builtin == "theorem3") return ccplan::fixture_theorem3();
    if (builtin == "observation4") return ccplan::fixture_observation4();
    if (builtin.empty()) throw UsageError("one of --env or --builtin is required");
    throw UsageError("unknown builtin '" + builtin +
                     "' (expected twin-states, tmaze, theorem3, observation4)");
}

/// Maps the library's infeasibility errors to exit code 2; everything the
/// library flags as invalid usage stays exit code 1.
ccplan::PlanReport run_method(const ccplan::Environment& env,
                              const ccplan::Commitment& c,
                              const std::string& method, int L, double resolution) {
    try {
        if (method == "ccl") return ccplan::plan_ccl(env, c, L);
        if (method == "ccil") return ccplan::plan_ccil(env, c, L < 1 ? 1 : L);
        if (method == "greedy") return ccplan::greedy_policy(env, c);
        if (method == "mdps-best") return ccplan::mdps_best(env, c);
        if (method == "exact-grid") return ccplan::exact_ccl_grid(env, c, L, resolution);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    } catch (const std::runtime_error& e) {
        throw InfeasibleError(e.what());
    }
    throw UsageError("unknown method '" + method +
                     "' (expected ccl, ccil, greedy, mdps-best, exact-grid)");
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
}

std::string report_csv(const ccplan::PlanReport& rep, int horizon) {
    std::ostringstream os;
    os << ccplan::csv_header() << "\n";
    for (const auto& row :
         ccplan::csv_rows(rep.method, rep.boundary, horizon, rep.report))
        os << row << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_plan(const std::string& env_file, const std::string& builtin, int horizon,
             const std::string& method, int L, double resolution,
             const std::string& out) {
    auto [env, c] = load_instance(env_file, builtin, horizon);
    ccplan::PlanReport rep = run_method(env, c, method, L, resolution);
    std::cout << "method=" << rep.method << " L=" << rep.boundary
              << " max_regret=" << rep.max_regret << "\n";
    if (!out.empty()) {
        if (rep.stochastic)
            throw UsageError("exact-grid policies have no JSON serialization; "
                             "omit --out");
        write_file(out, ccplan::serialize_policy(env, rep.policy).dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& env_file, const std::string& builtin,
                 int horizon, const std::string& policy_file,
                 const std::string& out) {
    auto [env, c] = load_instance(env_file, builtin, horizon);
    ccplan::LUpdatesPolicy pi;
    try {
        pi = ccplan::parse_policy(env, read_file(policy_file));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::map<int, double> u_star;
    try {
        u_star = ccplan::optimal_constrained_values(env, c);
    } catch (const std::runtime_error& e) {
        throw InfeasibleError(e.what());
    }
    ccplan::RegretReport rep = ccplan::regret_report(env, c, pi, u_star);
    emit(out, report_csv(ccplan::PlanReport{"evaluate", pi.boundary, pi, nullptr,
                                            std::nullopt, u_star, rep,
                                            rep.max_regret, 0, "", 0.0},
                         c.horizon));
    for (const auto& [k, e] : rep.per_mdp)
        if (e.commit_prob < c.probability - 1e-6)
            throw InfeasibleError("policy violates the commitment in MDP " +
                                  std::to_string(k) + " (probability " +
                                  std::to_string(e.commit_prob) + " < " +
                                  std::to_string(c.probability) + ")");
    return kExitOk;
}

int cmd_simulate(const std::string& env_file, const std::string& builtin,
                 int horizon, const std::string& method, int L, int true_k,
                 int episodes, std::uint64_t seed) {
    auto [env, c] = load_instance(env_file, builtin, horizon);
    if (true_k < 1 || true_k > env.num_mdps())
        throw UsageError("--true-mdp must be in [1, K]");
    if (episodes < 1) throw UsageError("--episodes must be >= 1");

    ccplan::SimStats stats;
    if (method == "ccil") {
        int lookahead = L < 1 ? 1 : L;
        double total = 0.0, total_sq = 0.0;
        int hits = 0;
        for (int ep = 0; ep < episodes; ++ep) {
            // run_ccil draws with (seed, episode, step) substreams.
            ccplan::EpisodeRecord rec;
            try {
                rec = ccplan::run_ccil(env, c, lookahead, true_k,
                                       seed + static_cast<std::uint64_t>(ep));
            } catch (const std::runtime_error& e) {
                throw InfeasibleError(e.what());
            }
            total += rec.total_reward;
            total_sq += rec.total_reward * rec.total_reward;
            if (rec.commitment_met) ++hits;
        }
        stats.episodes = episodes;
        stats.mean_utility = total / episodes;
        stats.commit_frequency = static_cast<double>(hits) / episodes;
        if (episodes > 1) {
            double var = (total_sq - total * total / episodes) / (episodes - 1);
            stats.std_error = std::sqrt(std::max(0.0, var) / episodes);
        }
    } else {
        if (method == "exact-grid")
            throw UsageError("simulate supports deterministic policies only "
                             "(ccl, ccil, greedy, mdps-best)");
        ccplan::PlanReport rep = run_method(env, c, method, L, 0.1);
        stats = ccplan::simulate(env, c, true_k, episodes, seed, [&] {
            return ccplan::LUpdatesAgent{&rep.policy,
                                         ccplan::initial_knowledge_state(env), false};
        });
    }
    std::cout << "episodes=" << stats.episodes
              << " mean_return=" << stats.mean_utility
              << " commit_frequency=" << stats.commit_frequency
              << " std_error=" << stats.std_error << "\n";
    return kExitOk;
}

int cmd_reproduce(const std::string& target, const std::string& horizons_arg,
                  const std::string& out) {
    std::ostringstream os;
    if (target == "twin-states") {
        std::vector<int> horizons;
        std::istringstream hs(horizons_arg);
        std::string tok;
        while (std::getline(hs, tok, ',')) horizons.push_back(std::stoi(tok));
        if (horizons.empty()) throw UsageError("--horizons must be nonempty");

        os << "method,L,horizon,max_regret\n";
        std::vector<std::string> rows;
        for (int T : horizons) {
            auto [env, c] = ccplan::twin_states(T);
            for (int L : {0, 1, 2, 3}) {
                if (L > T) continue;
                auto rep = ccplan::plan_ccl(env, c, L);
                rows.push_back("ccl," + std::to_string(L) + "," + std::to_string(T) +
                               "," + std::to_string(rep.max_regret));
            }
            rows.push_back("ccil,1," + std::to_string(T) + "," +
                           std::to_string(ccplan::plan_ccil(env, c, 1).max_regret));
            rows.push_back("greedy," + std::to_string(T) + "," + std::to_string(T) +
                           "," + std::to_string(ccplan::greedy_policy(env, c).max_regret));
            rows.push_back("mdps-best,0," + std::to_string(T) + "," +
                           std::to_string(ccplan::mdps_best(env, c).max_regret));
        }
        std::sort(rows.begin(), rows.end());
        for (const auto& row : rows) os << row << "\n";
    } else if (target == "theorem3") {
        auto [env, c] = ccplan::fixture_theorem3();
        os << "method,L,max_regret\n";
        os << "ccl,1," << ccplan::plan_ccl(env, c, 1).max_regret << "\n";
        os << "ccl,2," << ccplan::plan_ccl(env, c, 2).max_regret << "\n";
        os << "exact-grid,1," << ccplan::exact_ccl_grid(env, c, 1, 0.01).max_regret
           << "\n";
        os << "exact-grid,2," << ccplan::exact_ccl_grid(env, c, 2, 0.01).max_regret
           << "\n";
    } else {
        throw UsageError("unknown reproduction target '" + target +
                         "' (expected twin-states or theorem3)");
    }
    emit(out, os.str());
    return kExitOk;
}

int cmd_sweep(const std::string& env_file, const std::string& builtin, int horizon,
              const std::string& boundaries_arg, const std::string& out) {
    auto [env, c] = load_instance(env_file, builtin, horizon);

    std::vector<int> boundaries;
    auto dots = boundaries_arg.find("..");
    if (dots != std::string::npos) {
        int lo = std::stoi(boundaries_arg.substr(0, dots));
        int hi = std::stoi(boundaries_arg.substr(dots + 2));
        for (int L = lo; L <= hi; ++L) boundaries.push_back(L);
    } else {
        std::istringstream bs(boundaries_arg);
        std::string tok;
        while (std::getline(bs, tok, ',')) boundaries.push_back(std::stoi(tok));
    }
    if (boundaries.empty()) throw UsageError("--boundaries must be nonempty");
    for (int L : boundaries)
        if (L < 0 || L > c.horizon)
            throw UsageError("boundary " + std::to_string(L) + " outside [0, T]");

    std::ostringstream os;
    os << ccplan::csv_header() << "\n";
    std::vector<std::string> rows;
    for (int L : boundaries) {
        ccplan::PlanReport rep;
        try {
            rep = ccplan::plan_ccl(env, c, L);
        } catch (const std::runtime_error& e) {
            throw InfeasibleError(e.what());
        }
        for (const auto& row : ccplan::csv_rows("ccl", L, c.horizon, rep.report))
            rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& row : rows) os << row << "\n";
    emit(out, os.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimax-regret planning under probabilistic commitments"};
    app.require_subcommand(1);

    std::string env_file, builtin, method = "ccl", out, policy_file;
    std::string horizons = "3,5,7,9,11,13", boundaries = "0..0", target;
    int horizon = 3, L = 0, true_k = 1, episodes = 1000;
    std::uint64_t seed = 0;
    double resolution = 0.1;

    auto add_instance_flags = [&](CLI::App* cmd) {
        cmd->add_option("--env", env_file, "environment JSON file");
        cmd->add_option("--builtin", builtin,
                        "built-in instance: twin-states, tmaze, theorem3, "
                        "observation4");
        cmd->add_option("--horizon", horizon, "horizon for --builtin twin-states");
    };

    CLI::App* plan = app.add_subcommand("plan", "compute a policy");
    add_instance_flags(plan);
    plan->add_option("--method", method,
                     "ccl, ccil, greedy, mdps-best, or exact-grid");
    plan->add_option("--boundary", L, "knowledge-update boundary L");
    plan->add_option("--resolution", resolution, "exact-grid probability step");
    plan->add_option("--out", out, "write the policy JSON here");

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a policy file");
    add_instance_flags(evaluate);
    evaluate->add_option("--policy", policy_file, "policy JSON file")->required();
    evaluate->add_option("--out", out, "write the evaluation CSV here");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo simulation");
    add_instance_flags(simulate);
    simulate->add_option("--method", method, "ccl, ccil, greedy, or mdps-best");
    simulate->add_option("--boundary", L, "knowledge-update boundary L");
    simulate->add_option("--true-mdp", true_k, "index of the MDP to simulate");
    simulate->add_option("--episodes", episodes, "number of episodes");
    simulate->add_option("--seed", seed, "RNG seed");

    CLI::App* reproduce = app.add_subcommand("reproduce", "benchmark tables");
    reproduce->add_option("target", target, "twin-states or theorem3")->required();
    reproduce->add_option("--horizons", horizons, "comma-separated horizons");
    reproduce->add_option("--out", out, "write the CSV here");

    CLI::App* sweep = app.add_subcommand("sweep", "regret-vs-boundary CSV");
    add_instance_flags(sweep);
    sweep->add_option("--boundaries", boundaries,
                      "range lo..hi or comma-separated list");
    sweep->add_option("--out", out, "write the CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(plan))
            return cmd_plan(env_file, builtin, horizon, method, L, resolution, out);
        if (app.got_subcommand(evaluate))
            return cmd_evaluate(env_file, builtin, horizon, policy_file, out);
        if (app.got_subcommand(simulate))
            return cmd_simulate(env_file, builtin, horizon, method, L, true_k,
                                episodes, seed);
        if (app.got_subcommand(reproduce))
            return cmd_reproduce(target, horizons, out);
        if (app.got_subcommand(sweep))
            return cmd_sweep(env_file, builtin, horizon, boundaries, out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

// End-to-end planning methods: CCL/CCNL (exact minimax-regret L-updates
// planning), the CCIL online replanning loop, the Greedy and MDPs-Best
// baselines, and an exact grid search over stochastic policies for tiny
// instances.

#pragma once

#include "ccplan/ccl_search.hpp"
#include "ccplan/eval.hpp"
#include "ccplan/milp.hpp"
#include "ccplan/model.hpp"
#include "ccplan/programs.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ccplan {

/// A stochastic L-updates policy (exact_ccl_grid output): an action
/// distribution at every decision point.
struct StochasticPolicy {
    int boundary = 0;
    int horizon = 0;
    std::map<KnowledgeState, std::vector<double>> pre;
    std::map<KnowledgeState, std::map<std::pair<int, int>, std::vector<double>>> post;
};

/// The CCIL policy tree: one node per reachable replanning knowledge state,
/// each holding the plan computed there.
struct CcilNode {
    KnowledgeState state;
    LUpdatesPolicy plan;
    /// child node index per reachable boundary knowledge state of `plan`.
    std::map<KnowledgeState, int> children;
};
struct CcilTree {
    std::vector<CcilNode> nodes;  // nodes[0] is the root
    int lookahead = 0;
};

struct PlanReport {
    std::string method;
    int boundary = 0;  // L
    LUpdatesPolicy policy;
    std::shared_ptr<CcilTree> tree;  // set for CCIL only
    std::optional<StochasticPolicy> stochastic;  // set for exact_ccl_grid only
    std::map<int, double> u_star;
    RegretReport report;
    double max_regret = 0.0;
    long nodes = 0;          // solver nodes
    std::string engine;      // "milp" or "search"
    double wall_time = 0.0;  // seconds
};

// ---------------------------------------------------------------------------
// Constrained optima
// ---------------------------------------------------------------------------

/// Commitment-constrained optimal value of MDP k from (s, t) with required
/// terminal probability p_req; nullopt when infeasible.
inline std::optional<double> constrained_value_from(const Environment& env,
                                                    const Commitment& c, int k,
                                                    int s, int t, double p_req) {
    OccupancyLp prog = build_constrained_value_lp(env, k, s, t, c, p_req);
    SolveResult res = solve_lp(prog.lp);
    if (res.status != SolveStatus::Optimal) return std::nullopt;
    return -res.objective;
}

/// U*_c(k) for every k: the per-MDP optimum subject to the commitment.
inline std::map<int, double> optimal_constrained_values(const Environment& env,
                                                        const Commitment& c) {
    std::map<int, double> out;
    for (int k : env.all_mdps()) {
        auto v = constrained_value_from(env, c, k, env.initial_state(), 0,
                                        c.probability);
        if (!v)
            throw std::runtime_error("commitment unachievable in MDP " +
                                     std::to_string(k));
        out[k] = *v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CCL / CCNL
// ---------------------------------------------------------------------------

enum class CclEngine { Auto, Milp, Search };

namespace detail {
/// Exact minimax-regret (or single-MDP-regret) solve rooted at `root`,
/// routed to the generic MILP solver for small programs and to the
/// specialized branch-and-bound otherwise. Both engines are exact; tests
/// cross-validate them.
inline CclSearchResult solve_ccl(const Environment& env, const Commitment& c,
                                 const KnowledgeState& root, int L,
                                 const std::map<int, double>& p_map,
                                 const std::map<int, double>& u_star,
                                 int objective_k, CclEngine engine,
                                 std::string* engine_used = nullptr) {
    CclSearch search(env, c, root, L, p_map, u_star, objective_k);
    bool use_milp = engine == CclEngine::Milp ||
                    (engine == CclEngine::Auto &&
                     search.num_decision_points() * env.num_actions() <= 16);
    if (engine_used) *engine_used = use_milp ? "milp" : "search";
    if (!use_milp) return search.solve();

    CclProgram prog = build_ccl_program(env, c, L, u_star, root, p_map);
    if (objective_k != 0) {
        prog.mip.lp.objective[prog.z_var] = 0.0;
        prog.mip.lp.objective[prog.u_var.at(objective_k)] = -1.0;
    }
    SolveResult res = solve_milp(prog.mip);
    CclSearchResult out;
    if (res.status != SolveStatus::Optimal) return out;  // infeasible
    out.feasible = true;
    out.policy = extract_policy(env, prog, res.values);
    double obj = 0.0;
    for (int k : root.kappa) {
        Evaluation e = evaluate_exact(env, c, out.policy, k, root);
        out.utility[k] = e.utility;
        out.commit_prob[k] = e.commit_prob;
        if (objective_k == 0 || k == objective_k)
            obj = std::max(obj, u_star.at(k) - e.utility);
    }
    out.objective = obj;
    return out;
}

inline double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}
}  // namespace detail

/// Minimax-regret deterministic L-updates planning (CCNL when L = 0).
inline PlanReport plan_ccl(const Environment& env, const Commitment& c, int L,
                           CclEngine engine = CclEngine::Auto) {
    auto start = std::chrono::steady_clock::now();
    PlanReport rep;
    rep.method = "ccl";
    rep.boundary = L;
    rep.u_star = optimal_constrained_values(env, c);
    CclSearchResult res =
        detail::solve_ccl(env, c, initial_knowledge_state(env), L, {}, rep.u_star,
                          0, engine, &rep.engine);
    if (!res.feasible)
        throw std::runtime_error(
            "no deterministic " + std::to_string(L) +
            "-updates policy satisfies the commitment");
    rep.policy = res.policy;
    rep.nodes = res.nodes;
    rep.report = regret_report(env, c, rep.policy, rep.u_star);
    rep.max_regret = rep.report.max_regret;
    rep.wall_time = detail::seconds_since(start);
    return rep;
}

// ---------------------------------------------------------------------------
// CCIL
// ---------------------------------------------------------------------------

/// Online iterative-lookahead planner state. Replanning happens whenever the
/// trajectory reaches the current plan's boundary time (every L steps, with
/// a shorter final window when T is not a multiple of L).
struct CcilAgent {
    const Environment* env = nullptr;
    const Commitment* commitment = nullptr;
    int lookahead = 0;
    CclEngine engine = CclEngine::Auto;
    KnowledgeState state;
    LUpdatesPolicy plan;
    bool has_plan = false;
    std::map<int, double> p_k;     // per-MDP updated commitment requirements
    std::map<int, double> u_star;  // per-MDP updated constrained optima

    CcilAgent(const Environment& e, const Commitment& c, int L,
              CclEngine eng = CclEngine::Auto)
        : env(&e), commitment(&c), lookahead(L), engine(eng),
          state(initial_knowledge_state(e)) {
        if (L < 1 || L > c.horizon)
            throw std::invalid_argument("CCIL lookahead must be in [1, T]");
    }
};

namespace detail {
/// Commitment probability achieved by a post-boundary Markov rule from
/// (s, t) to the horizon under MDP k.
inline double rule_commit_prob(const Environment& env, const Commitment& c,
                               const std::map<std::pair<int, int>, int>& rule,
                               int s0, int t0, int k) {
    std::vector<double> dist(env.num_states(), 0.0);
    dist[s0] = 1.0;
    for (int t = t0; t < c.horizon; ++t) {
        std::vector<double> next(env.num_states(), 0.0);
        for (int s = 0; s < env.num_states(); ++s) {
            if (dist[s] <= 0.0) continue;
            int a = rule.at({s, t});
            const auto& row = env.transition_row(k, s, a);
            for (int s2 = 0; s2 < env.num_states(); ++s2)
                if (row[s2] > 0.0) next[s2] += dist[s] * row[s2];
        }
        dist = std::move(next);
    }
    double q = 0.0;
    for (int s = 0; s < env.num_states(); ++s)
        if (c.contains(s)) q += dist[s];
    return q;
}
}  // namespace detail

/// Replans at the agent's current knowledge state: updates the per-MDP
/// commitment requirements p(k) to what the outgoing plan would still
/// achieve from here, recomputes the per-MDP constrained optima under those
/// requirements, and solves the lookahead program rooted here.
inline LUpdatesPolicy ccil_replan(CcilAgent& agent) {
    const Environment& env = *agent.env;
    const Commitment& c = *agent.commitment;
    const KnowledgeState& b = agent.state;
    if (b.time >= c.horizon)
        throw std::logic_error("ccil_replan: already at the horizon");

    agent.p_k.clear();
    agent.u_star.clear();
    for (int k : b.kappa) {
        double pk;
        if (!agent.has_plan) {
            pk = c.probability;
        } else {
            const auto& rule = agent.plan.post.at(b);
            pk = detail::rule_commit_prob(env, c, rule, b.env_state, b.time, k);
            // Guard against accumulated rounding pushing past an exact bound.
            pk = std::min(1.0, std::max(0.0, pk));
        }
        auto v = constrained_value_from(env, c, k, b.env_state, b.time, pk);
        if (!v)
            throw std::logic_error(
                "ccil_replan: updated commitment row infeasible for MDP " +
                std::to_string(k));
        agent.p_k[k] = pk;
        agent.u_star[k] = *v;
    }

    int L = std::min(agent.lookahead, c.horizon - b.time);
    CclSearchResult res = detail::solve_ccl(env, c, b, L, agent.p_k, agent.u_star,
                                            0, agent.engine);
    if (!res.feasible)
        throw std::logic_error(
            "ccil_replan: lookahead program infeasible (previous plan should be "
            "a feasible incumbent)");
    agent.plan = res.policy;
    agent.has_plan = true;
    return agent.plan;
}

/// The agent's action at knowledge state b, replanning when b lies on the
/// current plan's boundary.
inline int ccil_act(CcilAgent& agent, const KnowledgeState& b) {
    agent.state = b;
    if (!agent.has_plan || b.time >= agent.plan.boundary) ccil_replan(agent);
    return agent.plan.pre.at(b);
}

struct EpisodeRecord {
    History trajectory;
    double total_reward = 0.0;
    bool commitment_met = false;
};

/// Simulates one CCIL episode under MDP true_k; deterministic given seed.
inline EpisodeRecord run_ccil(const Environment& env, const Commitment& c, int L,
                              int true_k, std::uint64_t seed) {
    CcilAgent agent(env, c, L);
    EpisodeRecord rec;
    rec.trajectory.initial_state = env.initial_state();
    KnowledgeState b = initial_knowledge_state(env);
    for (int t = 0; t < c.horizon; ++t) {
        int a = ccil_act(agent, b);
        double r = env.reward(true_k, b.env_state, a);
        double u = detail::uniform_draw(seed, 0, t);
        int s2 = detail::sample_row(env.transition_row(true_k, b.env_state, a), u);
        rec.trajectory.steps.push_back({a, r, s2});
        rec.total_reward += r;
        b = KnowledgeState{s2, t + 1,
                           filter_consistent(env, b.kappa, b.env_state, a, r, s2)};
    }
    rec.commitment_met = c.contains(b.env_state);
    return rec;
}

namespace detail {
inline int ccil_expand(const Environment& env, const Commitment& c, int L,
                       CcilTree& tree, CcilAgent agent) {
    if (tree.nodes.size() >= 100000)
        throw BudgetExhausted(SolveResult{});
    ccil_replan(agent);
    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(CcilNode{agent.state, agent.plan, {}});
    const LUpdatesPolicy plan = agent.plan;  // nodes vector may reallocate
    if (plan.boundary >= c.horizon) return index;

    // Boundary knowledge states reachable under some MDP: forward pass over
    // knowledge states following the plan's pre actions.
    std::set<KnowledgeState> frontier = {agent.state}, next;
    for (int t = agent.state.time; t < plan.boundary; ++t) {
        next.clear();
        for (const auto& b : frontier)
            for (const auto& succ : knowledge_successors(env, b, plan.pre.at(b)))
                next.insert(succ.state);
        frontier = next;
    }
    for (const auto& bl : frontier) {
        CcilAgent child = agent;
        child.state = bl;
        int ci = ccil_expand(env, c, L, tree, std::move(child));
        tree.nodes[index].children[bl] = ci;
    }
    return index;
}

/// Exact (u, q) of the CCIL tree from node `index` under MDP k.
inline Evaluation ccil_node_eval(const Environment& env, const Commitment& c,
                                 const CcilTree& tree, int index, int k) {
    const CcilNode& node = tree.nodes[index];
    const LUpdatesPolicy& plan = node.plan;
    Evaluation out;
    std::map<KnowledgeState, double> dist;
    dist[node.state] = 1.0;
    for (int t = node.state.time; t < plan.boundary; ++t) {
        std::map<KnowledgeState, double> next;
        for (const auto& [b, p] : dist) {
            int a = plan.pre.at(b);
            out.utility += p * env.reward(k, b.env_state, a);
            for (const auto& succ : knowledge_successors(env, b, a)) {
                double ps = succ.prob.at(k);
                if (ps > 0.0) next[succ.state] += p * ps;
            }
        }
        dist = std::move(next);
    }
    for (const auto& [bl, p] : dist) {
        if (plan.boundary >= c.horizon) {
            if (c.contains(bl.env_state)) out.commit_prob += p;
        } else {
            Evaluation sub =
                ccil_node_eval(env, c, tree, node.children.at(bl), k);
            out.utility += p * sub.utility;
            out.commit_prob += p * sub.commit_prob;
        }
    }
    return out;
}
}  // namespace detail

/// Materializes the full CCIL policy tree (every reachable replanning
/// knowledge state), enabling exact rather than Monte Carlo evaluation.
inline CcilTree ccil_full_policy(const Environment& env, const Commitment& c,
                                 int L, CclEngine engine = CclEngine::Auto) {
    CcilTree tree;
    tree.lookahead = L;
    detail::ccil_expand(env, c, L, tree, CcilAgent(env, c, L, engine));
    return tree;
}

inline Evaluation evaluate_exact(const Environment& env, const Commitment& c,
                                 const CcilTree& tree, int k) {
    return detail::ccil_node_eval(env, c, tree, 0, k);
}

/// Full CCIL report with exact per-MDP evaluation over the policy tree.
inline PlanReport plan_ccil(const Environment& env, const Commitment& c, int L,
                            CclEngine engine = CclEngine::Auto) {
    auto start = std::chrono::steady_clock::now();
    PlanReport rep;
    rep.method = "ccil";
    rep.boundary = L;
    rep.u_star = optimal_constrained_values(env, c);
    rep.tree = std::make_shared<CcilTree>(ccil_full_policy(env, c, L, engine));
    rep.policy = rep.tree->nodes[0].plan;
    for (int k : env.all_mdps()) {
        Evaluation e = evaluate_exact(env, c, *rep.tree, k);
        rep.report.per_mdp[k] = e;
        rep.report.regret[k] = rep.u_star.at(k) - e.utility;
        rep.report.max_regret =
            std::max(rep.report.max_regret, rep.report.regret[k]);
    }
    rep.max_regret = rep.report.max_regret;
    rep.wall_time = detail::seconds_since(start);
    return rep;
}

// ---------------------------------------------------------------------------
// Greedy baseline
// ---------------------------------------------------------------------------

namespace detail {
/// Memoized commitment safety over knowledge states (p = 1 case): a
/// knowledge state is safe when some action leads surely — in every
/// still-consistent MDP — to safe successors, bottoming out at the horizon
/// in the target set.
class SafetyOracle {
  public:
    SafetyOracle(const Environment& env, const Commitment& c) : env_(env), c_(c) {}

    bool safe(const KnowledgeState& b) {
        auto it = memo_.find(b);
        if (it != memo_.end()) return it->second != 0;
        bool result;
        if (b.time >= c_.horizon) {
            result = c_.contains(b.env_state);
        } else {
            result = false;
            for (int a = 0; a < env_.num_actions() && !result; ++a)
                result = safe_action(b, a);
        }
        memo_[b] = result ? 1 : 0;
        return result;
    }

    bool safe_action(const KnowledgeState& b, int a) {
        for (const auto& succ : knowledge_successors(env_, b, a))
            if (!safe(succ.state)) return false;
        return true;
    }

  private:
    const Environment& env_;
    const Commitment& c_;
    std::map<KnowledgeState, char> memo_;
};
}  // namespace detail

/// Myopic minimax-regret baseline: at each knowledge state, among the
/// commitment-safe actions, picks the one minimizing the worst-case
/// immediate regret max_k (max_a' R(k,s,a') - R(k,s,a)); ties to the lowest
/// action index. Only p in {0, 1} is supported.
inline PlanReport greedy_policy(const Environment& env, const Commitment& c) {
    auto start = std::chrono::steady_clock::now();
    if (c.probability != 0.0 && c.probability != 1.0)
        throw std::invalid_argument(
            "greedy baseline requires commitment probability 0 or 1");
    const bool guarded = c.probability == 1.0;
    detail::SafetyOracle safety(env, c);

    PlanReport rep;
    rep.method = "greedy";
    rep.boundary = c.horizon;
    rep.u_star = optimal_constrained_values(env, c);
    rep.policy.boundary = c.horizon;
    rep.policy.horizon = c.horizon;

    std::set<KnowledgeState> frontier = {initial_knowledge_state(env)};
    for (int t = 0; t < c.horizon; ++t) {
        std::set<KnowledgeState> next;
        for (const auto& b : frontier) {
            int chosen = -1;
            double chosen_regret = kInfinity;
            for (int a = 0; a < env.num_actions(); ++a) {
                if (guarded && !safety.safe_action(b, a)) continue;
                double worst = 0.0;
                for (int k : b.kappa) {
                    double best_r = env.reward(k, b.env_state, 0);
                    for (int a2 = 1; a2 < env.num_actions(); ++a2)
                        best_r = std::max(best_r, env.reward(k, b.env_state, a2));
                    worst = std::max(worst, best_r - env.reward(k, b.env_state, a));
                }
                if (worst < chosen_regret - 1e-12) {
                    chosen_regret = worst;
                    chosen = a;
                }
            }
            if (chosen < 0)
                throw std::runtime_error(
                    "greedy: no commitment-safe action at a reachable state");
            rep.policy.pre[b] = chosen;
            for (const auto& succ : knowledge_successors(env, b, chosen))
                next.insert(succ.state);
        }
        frontier = std::move(next);
    }
    for (const auto& bl : frontier) rep.policy.post[bl];  // empty terminal rules

    rep.report = regret_report(env, c, rep.policy, rep.u_star);
    rep.max_regret = rep.report.max_regret;
    rep.wall_time = detail::seconds_since(start);
    return rep;
}

// ---------------------------------------------------------------------------
// MDPs-Best baseline
// ---------------------------------------------------------------------------

/// For each k, computes a deterministic Markov policy maximizing U(k)
/// subject to all K commitment rows (the L = 0 program with a single-MDP
/// objective), then returns the candidate with the least max regret, ties to
/// the lowest k.
inline PlanReport mdps_best(const Environment& env, const Commitment& c,
                            CclEngine engine = CclEngine::Auto) {
    auto start = std::chrono::steady_clock::now();
    PlanReport rep;
    rep.method = "mdps-best";
    rep.boundary = 0;
    rep.u_star = optimal_constrained_values(env, c);

    bool found = false;
    for (int k : env.all_mdps()) {
        std::string engine_used;
        CclSearchResult res =
            detail::solve_ccl(env, c, initial_knowledge_state(env), 0, {},
                              rep.u_star, k, engine, &engine_used);
        if (!res.feasible)
            throw std::runtime_error(
                "no deterministic Markov policy satisfies the commitment");
        RegretReport cand = regret_report(env, c, res.policy, rep.u_star);
        if (!found || cand.max_regret < rep.max_regret - 1e-9) {
            found = true;
            rep.policy = res.policy;
            rep.report = cand;
            rep.max_regret = cand.max_regret;
            rep.engine = engine_used;
            rep.nodes += res.nodes;
        }
    }
    rep.wall_time = detail::seconds_since(start);
    return rep;
}

// ---------------------------------------------------------------------------
// Exact stochastic grid search
// ---------------------------------------------------------------------------

namespace detail {
/// Exact evaluation of a stochastic L-updates policy under MDP k.
inline Evaluation evaluate_stochastic(const Environment& env, const Commitment& c,
                                      const StochasticPolicy& pi, int k) {
    Evaluation out;
    std::map<KnowledgeState, double> dist;
    dist[initial_knowledge_state(env)] = 1.0;
    for (int t = 0; t < pi.boundary; ++t) {
        std::map<KnowledgeState, double> next;
        for (const auto& [b, p] : dist) {
            const auto& w = pi.pre.at(b);
            for (int a = 0; a < env.num_actions(); ++a) {
                if (w[a] <= 0.0) continue;
                out.utility += p * w[a] * env.reward(k, b.env_state, a);
                for (const auto& succ : knowledge_successors(env, b, a)) {
                    double ps = succ.prob.at(k);
                    if (ps > 0.0) next[succ.state] += p * w[a] * ps;
                }
            }
        }
        dist = std::move(next);
    }
    for (const auto& [bl, p_bl] : dist) {
        if (pi.boundary >= pi.horizon) {
            if (c.contains(bl.env_state)) out.commit_prob += p_bl;
            continue;
        }
        const auto& rule = pi.post.at(bl);
        std::vector<double> sd(env.num_states(), 0.0);
        sd[bl.env_state] = 1.0;
        for (int t = pi.boundary; t < pi.horizon; ++t) {
            std::vector<double> nd(env.num_states(), 0.0);
            for (int s = 0; s < env.num_states(); ++s) {
                if (sd[s] <= 0.0) continue;
                const auto& w = rule.at({s, t});
                for (int a = 0; a < env.num_actions(); ++a) {
                    if (w[a] <= 0.0) continue;
                    out.utility += p_bl * sd[s] * w[a] * env.reward(k, s, a);
                    const auto& row = env.transition_row(k, s, a);
                    for (int s2 = 0; s2 < env.num_states(); ++s2)
                        if (row[s2] > 0.0) nd[s2] += sd[s] * w[a] * row[s2];
                }
            }
            sd = std::move(nd);
        }
        for (int s = 0; s < env.num_states(); ++s)
            if (c.contains(s)) out.commit_prob += p_bl * sd[s];
    }
    return out;
}
}  // namespace detail

/// Exhaustive grid search over stochastic L-updates policies at probability
/// step `resolution`. Actions are pruned beforehand: duplicates (identical
/// rewards and transition rows in every consistent MDP), commitment-unsafe
/// actions when p = 1, and actions whose best-case value is strictly below
/// another action's worst-case value in every consistent MDP. The remaining
/// free dimensions must satisfy sum (|allowed|-1) <= 8.
inline PlanReport exact_ccl_grid(const Environment& env, const Commitment& c,
                                 int L, double resolution) {
    auto start = std::chrono::steady_clock::now();
    const int T = c.horizon;
    if (L < 0 || L > T)
        throw std::invalid_argument("lookahead boundary must be in [0, T]");
    if (resolution <= 0.0 || resolution > 1.0)
        throw std::invalid_argument("grid resolution must be in (0, 1]");
    const int grid_n = static_cast<int>(std::lround(1.0 / resolution));
    if (std::abs(grid_n * resolution - 1.0) > 1e-9)
        throw std::invalid_argument("grid resolution must divide 1");

    const bool guarded = c.probability == 1.0;
    detail::SafetyOracle safety(env, c);

    // Post-boundary safety over (kappa, s, t): shared-action universal
    // reachability of the target set.
    std::map<std::tuple<std::vector<int>, int, int>, char> post_safe_memo;
    std::function<bool(const std::vector<int>&, int, int)> post_safe =
        [&](const std::vector<int>& kappa, int s, int t) -> bool {
        if (t >= T) return c.contains(s);
        auto key = std::make_tuple(kappa, s, t);
        auto it = post_safe_memo.find(key);
        if (it != post_safe_memo.end()) return it->second != 0;
        bool ok = false;
        for (int a = 0; a < env.num_actions() && !ok; ++a) {
            ok = true;
            for (int k : kappa) {
                const auto& row = env.transition_row(k, s, a);
                for (int s2 = 0; s2 < env.num_states(); ++s2)
                    if (row[s2] > 0.0 && !post_safe(kappa, s2, t + 1)) {
                        ok = false;
                        break;
                    }
                if (!ok) break;
            }
        }
        post_safe_memo[key] = ok ? 1 : 0;
        return ok;
    };
    auto post_safe_action = [&](const std::vector<int>& kappa, int s, int t,
                                int a) -> bool {
        for (int k : kappa) {
            const auto& row = env.transition_row(k, s, a);
            for (int s2 = 0; s2 < env.num_states(); ++s2)
                if (row[s2] > 0.0 && !post_safe(kappa, s2, t + 1)) return false;
        }
        return true;
    };

    // Decision points with allowed action sets, built forward so that only
    // states reachable through allowed actions are enumerated.
    struct Point {
        bool is_pre;
        KnowledgeState b;      // pre point, or the boundary state of a post point
        int s = 0, t = 0;      // post point coordinates
        std::vector<int> allowed;
    };
    std::vector<Point> points;

    auto duplicate_of = [&](const std::vector<int>& kappa, int s, int a,
                            int a2) -> bool {
        for (int k : kappa) {
            if (std::abs(env.reward(k, s, a) - env.reward(k, s, a2)) > kRewardMatchTol)
                return false;
            if (env.transition_row(k, s, a) != env.transition_row(k, s, a2))
                return false;
        }
        return true;
    };

    // Interval DP for dominance pruning: per (pre knowledge state | post
    // point) and MDP, the min and max continuation value over allowed
    // actions. Computed lazily against the *unpruned-but-safe* action sets.
    std::map<std::tuple<std::vector<int>, int, int, int>, std::pair<double, double>>
        post_iv_memo;
    std::function<std::pair<double, double>(const std::vector<int>&, int, int, int)>
        post_interval = [&](const std::vector<int>& kappa, int s, int t,
                            int k) -> std::pair<double, double> {
        if (t >= T) return {0.0, 0.0};
        auto key = std::make_tuple(kappa, s, t, k);
        auto it = post_iv_memo.find(key);
        if (it != post_iv_memo.end()) return it->second;
        double lo = kInfinity, hi = -kInfinity;
        for (int a = 0; a < env.num_actions(); ++a) {
            if (guarded && !post_safe_action(kappa, s, t, a)) continue;
            double alo = env.reward(k, s, a), ahi = alo;
            const auto& row = env.transition_row(k, s, a);
            for (int s2 = 0; s2 < env.num_states(); ++s2) {
                if (row[s2] <= 0.0) continue;
                auto sub = post_interval(kappa, s2, t + 1, k);
                alo += row[s2] * sub.first;
                ahi += row[s2] * sub.second;
            }
            lo = std::min(lo, alo);
            hi = std::max(hi, ahi);
        }
        if (lo > hi) lo = hi = 0.0;  // no safe action; unreachable in practice
        auto res = std::make_pair(lo, hi);
        post_iv_memo[key] = res;
        return res;
    };
    std::map<std::pair<KnowledgeState, int>, std::pair<double, double>> pre_iv_memo;
    std::function<std::pair<double, double>(const KnowledgeState&, int)>
        pre_interval = [&](const KnowledgeState& b, int k) -> std::pair<double, double> {
        if (b.time >= L) return post_interval(b.kappa, b.env_state, b.time, k);
        auto key = std::make_pair(b, k);
        auto it = pre_iv_memo.find(key);
        if (it != pre_iv_memo.end()) return it->second;
        double lo = kInfinity, hi = -kInfinity;
        for (int a = 0; a < env.num_actions(); ++a) {
            if (guarded && !safety.safe_action(b, a)) continue;
            double alo = env.reward(k, b.env_state, a), ahi = alo;
            for (const auto& succ : knowledge_successors(env, b, a)) {
                double pr = succ.prob.at(k);
                if (pr <= 0.0) continue;
                auto sub = pre_interval(succ.state, k);
                alo += pr * sub.first;
                ahi += pr * sub.second;
            }
            lo = std::min(lo, alo);
            hi = std::max(hi, ahi);
        }
        if (lo > hi) lo = hi = 0.0;
        auto res = std::make_pair(lo, hi);
        pre_iv_memo[key] = res;
        return res;
    };

    auto prune = [&](const KnowledgeState& b, bool is_pre, int s, int t,
                     std::vector<int> allowed) {
        const std::vector<int>& kappa = b.kappa;
        int ps = is_pre ? b.env_state : s;
        // Duplicate collapse.
        std::vector<int> kept;
        for (int a : allowed) {
            bool dup = false;
            for (int a2 : kept)
                if (duplicate_of(kappa, ps, a, a2)) dup = true;
            if (!dup) kept.push_back(a);
        }
        // Strict interval dominance: drop a when some a' beats its best case
        // in every consistent MDP.
        std::vector<int> result;
        for (int a : kept) {
            bool dominated = false;
            for (int a2 : kept) {
                if (a2 == a) continue;
                bool dominates = true;
                for (int k : kappa) {
                    double a_hi, a2_lo;
                    if (is_pre) {
                        double r = env.reward(k, b.env_state, a);
                        a_hi = r;
                        for (const auto& succ : knowledge_successors(env, b, a)) {
                            double pr = succ.prob.at(k);
                            if (pr > 0.0) a_hi += pr * pre_interval(succ.state, k).second;
                        }
                        double r2 = env.reward(k, b.env_state, a2);
                        a2_lo = r2;
                        for (const auto& succ : knowledge_successors(env, b, a2)) {
                            double pr = succ.prob.at(k);
                            if (pr > 0.0) a2_lo += pr * pre_interval(succ.state, k).first;
                        }
                    } else {
                        a_hi = env.reward(k, s, a);
                        a2_lo = env.reward(k, s, a2);
                        const auto& row = env.transition_row(k, s, a);
                        const auto& row2 = env.transition_row(k, s, a2);
                        for (int s2 = 0; s2 < env.num_states(); ++s2) {
                            if (row[s2] > 0.0)
                                a_hi += row[s2] * post_interval(kappa, s2, t + 1, k).second;
                            if (row2[s2] > 0.0)
                                a2_lo += row2[s2] * post_interval(kappa, s2, t + 1, k).first;
                        }
                    }
                    if (!(a_hi < a2_lo - 1e-12)) {
                        dominates = false;
                        break;
                    }
                }
                if (dominates) {
                    dominated = true;
                    break;
                }
            }
            if (!dominated) result.push_back(a);
        }
        return result;
    };

    // Pre-boundary frontier.
    std::set<KnowledgeState> frontier = {initial_knowledge_state(env)};
    for (int t = 0; t < L; ++t) {
        std::set<KnowledgeState> next;
        for (const auto& b : frontier) {
            std::vector<int> allowed;
            for (int a = 0; a < env.num_actions(); ++a)
                if (!guarded || safety.safe_action(b, a)) allowed.push_back(a);
            allowed = prune(b, true, 0, 0, std::move(allowed));
            if (allowed.empty())
                throw std::runtime_error("exact grid: no safe action at a reachable state");
            for (int a : allowed)
                for (const auto& succ : knowledge_successors(env, b, a))
                    next.insert(succ.state);
            points.push_back(Point{true, b, 0, 0, std::move(allowed)});
        }
        frontier = std::move(next);
    }
    // Post-boundary points per boundary state.
    for (const auto& bl : frontier) {
        std::set<int> cur = {bl.env_state};
        for (int t = L; t < T; ++t) {
            std::set<int> nxt;
            for (int s : cur) {
                std::vector<int> allowed;
                for (int a = 0; a < env.num_actions(); ++a)
                    if (!guarded || post_safe_action(bl.kappa, s, t, a))
                        allowed.push_back(a);
                allowed = prune(bl, false, s, t, std::move(allowed));
                if (allowed.empty())
                    throw std::runtime_error(
                        "exact grid: no safe action at a reachable state");
                for (int a : allowed)
                    for (int k : bl.kappa) {
                        const auto& row = env.transition_row(k, s, a);
                        for (int s2 = 0; s2 < env.num_states(); ++s2)
                            if (row[s2] > 0.0) nxt.insert(s2);
                    }
                points.push_back(Point{false, bl, s, t, std::move(allowed)});
            }
            cur = std::move(nxt);
        }
    }

    int free_dims = 0;
    for (const auto& pt : points) free_dims += static_cast<int>(pt.allowed.size()) - 1;
    if (free_dims > 8) throw std::invalid_argument("instance too large for exact grid");

    PlanReport rep;
    rep.method = "exact-grid";
    rep.boundary = L;
    rep.u_star = optimal_constrained_values(env, c);
    rep.max_regret = kInfinity;

    // Enumerate compositions of grid_n over each point's allowed set.
    StochasticPolicy cand;
    cand.boundary = L;
    cand.horizon = T;
    std::optional<StochasticPolicy> best;
    RegretReport best_rep;
    std::function<void(size_t)> enumerate = [&](size_t i) {
        if (i == points.size()) {
            RegretReport r;
            for (int k : env.all_mdps()) {
                Evaluation e = detail::evaluate_stochastic(env, c, cand, k);
                if (e.commit_prob < c.probability - 1e-6) return;  // infeasible
                r.per_mdp[k] = e;
                r.regret[k] = rep.u_star.at(k) - e.utility;
                r.max_regret = std::max(r.max_regret, r.regret[k]);
            }
            if (r.max_regret < rep.max_regret - 1e-12) {
                rep.max_regret = r.max_regret;
                best = cand;
                best_rep = r;
            }
            return;
        }
        const Point& pt = points[i];
        std::vector<double> w(env.num_actions(), 0.0);
        std::function<void(size_t, int)> compose = [&](size_t j, int left) {
            if (j + 1 == pt.allowed.size()) {
                w[pt.allowed[j]] = left * resolution;
                if (pt.is_pre)
                    cand.pre[pt.b] = w;
                else
                    cand.post[pt.b][{pt.s, pt.t}] = w;
                enumerate(i + 1);
                w[pt.allowed[j]] = 0.0;
                return;
            }
            for (int n = 0; n <= left; ++n) {
                w[pt.allowed[j]] = n * resolution;
                compose(j + 1, left - n);
            }
            w[pt.allowed[j]] = 0.0;
        };
        compose(0, grid_n);
    };
    enumerate(0);

    if (!best) throw std::runtime_error("exact grid: no feasible policy on the grid");
    rep.stochastic = *best;
    rep.report = best_rep;
    rep.wall_time = detail::seconds_since(start);
    return rep;
}

}  // namespace ccplan

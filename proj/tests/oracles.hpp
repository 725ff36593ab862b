// Independent oracles used by the test suite. Everything here is written
// from first principles (backward DP, exhaustive enumeration, vertex
// enumeration) and deliberately avoids the library's solver and program
// builders, so agreement between the two is meaningful.

#pragma once

#include "ccplan/eval.hpp"
#include "ccplan/model.hpp"
#include "ccplan/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace oracles {

using ccplan::Commitment;
using ccplan::Environment;
using ccplan::KnowledgeState;
using ccplan::LUpdatesPolicy;

// ---------------------------------------------------------------------------
// Finite-horizon DP
// ---------------------------------------------------------------------------

/// Unconstrained finite-horizon optimum of MDP k from (s, t) to T by
/// backward induction.
inline double dp_unconstrained(const Environment& env, int k, int s_start,
                               int t_start, int T) {
    std::vector<double> v(env.num_states(), 0.0);
    for (int t = T - 1; t >= t_start; --t) {
        std::vector<double> nv(env.num_states(), 0.0);
        for (int s = 0; s < env.num_states(); ++s) {
            double best = -1e100;
            for (int a = 0; a < env.num_actions(); ++a) {
                double q = env.reward(k, s, a);
                const auto& row = env.transition_row(k, s, a);
                for (int s2 = 0; s2 < env.num_states(); ++s2)
                    if (row[s2] > 0.0) q += row[s2] * v[s2];
                best = std::max(best, q);
            }
            nv[s] = best;
        }
        v = std::move(nv);
    }
    return v[s_start];
}

/// Maximum probability of being in the target set at time T, from (s, t),
/// under MDP k (backward reachability DP).
inline double dp_max_reach(const Environment& env, const Commitment& c, int k,
                           int s_start, int t_start) {
    std::vector<double> v(env.num_states(), 0.0);
    for (int s = 0; s < env.num_states(); ++s)
        if (c.contains(s)) v[s] = 1.0;
    for (int t = c.horizon - 1; t >= t_start; --t) {
        std::vector<double> nv(env.num_states(), 0.0);
        for (int s = 0; s < env.num_states(); ++s) {
            double best = 0.0;
            for (int a = 0; a < env.num_actions(); ++a) {
                double q = 0.0;
                const auto& row = env.transition_row(k, s, a);
                for (int s2 = 0; s2 < env.num_states(); ++s2)
                    if (row[s2] > 0.0) q += row[s2] * v[s2];
                best = std::max(best, q);
            }
            nv[s] = best;
        }
        v = std::move(nv);
    }
    return v[s_start];
}

/// (utility, terminal target probability) of a deterministic time-dependent
/// Markov rule under MDP k, by forward DP.
inline std::pair<double, double>
markov_eval(const Environment& env, const Commitment& c, int k,
            const std::vector<std::vector<int>>& rule, int s_start, int t_start) {
    std::vector<double> dist(env.num_states(), 0.0);
    dist[s_start] = 1.0;
    double utility = 0.0;
    for (int t = t_start; t < c.horizon; ++t) {
        std::vector<double> next(env.num_states(), 0.0);
        for (int s = 0; s < env.num_states(); ++s) {
            if (dist[s] <= 0.0) continue;
            int a = rule[t - t_start][s];
            utility += dist[s] * env.reward(k, s, a);
            const auto& row = env.transition_row(k, s, a);
            for (int s2 = 0; s2 < env.num_states(); ++s2)
                if (row[s2] > 0.0) next[s2] += dist[s] * row[s2];
        }
        dist = std::move(next);
    }
    double q = 0.0;
    for (int s = 0; s < env.num_states(); ++s)
        if (c.contains(s)) q += dist[s];
    return {utility, q};
}

/// Commitment-constrained optimum over deterministic Markov rules, by
/// exhaustive enumeration. Exact for the constrained value whenever a
/// deterministic rule attains it (always true at p_req in {0, 1}, and for
/// deterministic-transition environments at any p_req). Returns nullopt when
/// no deterministic rule achieves p_req.
inline std::optional<double>
enum_constrained_value(const Environment& env, const Commitment& c, int k,
                       int s_start, int t_start, double p_req) {
    const int steps = c.horizon - t_start;
    const int S = env.num_states(), A = env.num_actions();
    std::vector<std::vector<int>> rule(steps, std::vector<int>(S, 0));
    std::optional<double> best;
    std::function<void(int, int)> rec = [&](int t, int s) {
        if (t == steps) {
            auto [u, q] = markov_eval(env, c, k, rule, s_start, t_start);
            if (q >= p_req - 1e-9 && (!best || u > *best)) best = u;
            return;
        }
        if (s == S) {
            rec(t + 1, 0);
            return;
        }
        for (int a = 0; a < A; ++a) {
            rule[t][s] = a;
            rec(t, s + 1);
        }
    };
    rec(0, 0);
    return best;
}

// ---------------------------------------------------------------------------
// Exhaustive deterministic L-updates planning
// ---------------------------------------------------------------------------

/// Exact evaluation of a deterministic L-updates policy under MDP k, written
/// independently of the library's evaluator: forward pass over knowledge
/// states before the boundary and over (boundary state, env-state) after.
inline ccplan::Evaluation lupdates_eval(const Environment& env,
                                        const Commitment& c,
                                        const LUpdatesPolicy& pi, int k) {
    ccplan::Evaluation out;
    std::map<KnowledgeState, double> dist;
    dist[ccplan::initial_knowledge_state(env)] = 1.0;
    for (int t = 0; t < pi.boundary; ++t) {
        std::map<KnowledgeState, double> next;
        for (const auto& [b, p] : dist) {
            int a = pi.pre.at(b);
            out.utility += p * env.reward(k, b.env_state, a);
            for (const auto& succ : knowledge_successors(env, b, a)) {
                double ps = succ.prob.at(k);
                if (ps > 0.0) next[succ.state] += p * ps;
            }
        }
        dist = std::move(next);
    }
    for (const auto& [bl, p_bl] : dist) {
        if (pi.boundary >= c.horizon) {
            if (c.contains(bl.env_state)) out.commit_prob += p_bl;
            continue;
        }
        const auto& rule = pi.post.at(bl);
        std::vector<double> sd(env.num_states(), 0.0);
        sd[bl.env_state] = 1.0;
        for (int t = pi.boundary; t < c.horizon; ++t) {
            std::vector<double> nd(env.num_states(), 0.0);
            for (int s = 0; s < env.num_states(); ++s) {
                if (sd[s] <= 0.0) continue;
                int a = rule.at({s, t});
                out.utility += p_bl * sd[s] * env.reward(k, s, a);
                const auto& row = env.transition_row(k, s, a);
                for (int s2 = 0; s2 < env.num_states(); ++s2)
                    if (row[s2] > 0.0) nd[s2] += sd[s] * row[s2];
            }
            sd = std::move(nd);
        }
        for (int s = 0; s < env.num_states(); ++s)
            if (c.contains(s)) out.commit_prob += p_bl * sd[s];
    }
    return out;
}

struct BruteForceResult {
    bool feasible = false;
    double max_regret = 0.0;
    LUpdatesPolicy policy;
};

/// Brute-force minimax regret over ALL deterministic L-updates policies:
/// depth-first assignment of an action to every decision point reachable
/// under the partial assignment, followed by exact evaluation. Only suitable
/// for tiny instances.
inline BruteForceResult brute_force_ccl(const Environment& env,
                                        const Commitment& c, int L,
                                        const std::map<int, double>& u_star) {
    const int T = c.horizon;
    BruteForceResult best;

    LUpdatesPolicy pi;
    pi.boundary = L;
    pi.horizon = T;

    // Enumerate post-boundary Markov rules for the boundary states in
    // `frontier` (in order), then evaluate the complete policy.
    std::vector<KnowledgeState> boundary;
    std::function<void(size_t)> assign_post = [&](size_t bi) {
        if (bi == boundary.size()) {
            double worst = 0.0;
            bool ok = true;
            for (int k : env.all_mdps()) {
                ccplan::Evaluation e = lupdates_eval(env, c, pi, k);
                if (e.commit_prob < c.probability - 1e-9) {
                    ok = false;
                    break;
                }
                worst = std::max(worst, u_star.at(k) - e.utility);
            }
            if (ok && (!best.feasible || worst < best.max_regret)) {
                best.feasible = true;
                best.max_regret = worst;
                best.policy = pi;
            }
            return;
        }
        const KnowledgeState& bl = boundary[bi];
        auto& rule = pi.post[bl];
        // Points reachable under the partially built rule, layer by layer.
        std::function<void(std::set<int>, int)> per_layer =
            [&](std::set<int> cur, int t) {
                if (t == T) {
                    assign_post(bi + 1);
                    return;
                }
                std::vector<int> cells(cur.begin(), cur.end());
                std::function<void(size_t)> pick = [&](size_t i) {
                    if (i == cells.size()) {
                        std::set<int> nxt;
                        for (int s : cells) {
                            int a = rule.at({s, t});
                            for (int k : bl.kappa) {
                                const auto& row = env.transition_row(k, s, a);
                                for (int s2 = 0; s2 < env.num_states(); ++s2)
                                    if (row[s2] > 0.0) nxt.insert(s2);
                            }
                        }
                        per_layer(std::move(nxt), t + 1);
                        return;
                    }
                    for (int a = 0; a < env.num_actions(); ++a) {
                        rule[{cells[i], t}] = a;
                        pick(i + 1);
                        rule.erase({cells[i], t});
                    }
                };
                pick(0);
            };
        per_layer({bl.env_state}, L);
        pi.post.erase(bl);
    };

    // Enumerate pre-boundary actions for the knowledge states reachable
    // under the partial assignment, layer by layer.
    std::function<void(std::set<KnowledgeState>, int)> assign_pre =
        [&](std::set<KnowledgeState> cur, int t) {
            if (t == L) {
                boundary.assign(cur.begin(), cur.end());
                assign_post(0);
                return;
            }
            std::vector<KnowledgeState> states(cur.begin(), cur.end());
            std::function<void(size_t)> pick = [&](size_t i) {
                if (i == states.size()) {
                    std::set<KnowledgeState> nxt;
                    for (const auto& b : states)
                        for (const auto& succ :
                             knowledge_successors(env, b, pi.pre.at(b)))
                            nxt.insert(succ.state);
                    assign_pre(std::move(nxt), t + 1);
                    return;
                }
                for (int a = 0; a < env.num_actions(); ++a) {
                    pi.pre[states[i]] = a;
                    pick(i + 1);
                    pi.pre.erase(states[i]);
                }
            };
            pick(0);
        };

    assign_pre({ccplan::initial_knowledge_state(env)}, 0);
    return best;
}

// ---------------------------------------------------------------------------
// LP / MILP brute force
// ---------------------------------------------------------------------------

/// Solves a bounded LP by vertex enumeration: every subset of n constraints
/// (rows at equality plus active variable bounds) defines a candidate basic
/// point; the best feasible one is optimal. All variables must have finite
/// bounds. Returns nullopt when no feasible vertex exists.
inline std::optional<double> vertex_enum_lp(const ccplan::LinearProgram& lp) {
    const int n = static_cast<int>(lp.objective.size());
    // Constraint list: each entry is (coefficients, rhs) of a hyperplane that
    // may be active, plus a feasibility predicate evaluated afterwards.
    struct Plane {
        std::vector<double> coef;
        double rhs;
    };
    std::vector<Plane> planes;
    for (const auto& row : lp.rows) {
        Plane pl{std::vector<double>(n, 0.0), row.rhs};
        for (size_t i = 0; i < row.indices.size(); ++i)
            pl.coef[row.indices[i]] += row.coefficients[i];
        planes.push_back(std::move(pl));
    }
    for (int j = 0; j < n; ++j) {
        Plane lo{std::vector<double>(n, 0.0), lp.lower[j]};
        lo.coef[j] = 1.0;
        planes.push_back(std::move(lo));
        Plane hi{std::vector<double>(n, 0.0), lp.upper[j]};
        hi.coef[j] = 1.0;
        planes.push_back(std::move(hi));
    }

    auto feasible = [&](const std::vector<double>& x) {
        for (const auto& row : lp.rows) {
            double lhs = 0.0;
            for (size_t i = 0; i < row.indices.size(); ++i)
                lhs += row.coefficients[i] * x[row.indices[i]];
            if (row.sense == ccplan::Sense::LessEqual && lhs > row.rhs + 1e-7)
                return false;
            if (row.sense == ccplan::Sense::GreaterEqual && lhs < row.rhs - 1e-7)
                return false;
            if (row.sense == ccplan::Sense::Equal && std::abs(lhs - row.rhs) > 1e-7)
                return false;
        }
        for (int j = 0; j < n; ++j)
            if (x[j] < lp.lower[j] - 1e-7 || x[j] > lp.upper[j] + 1e-7) return false;
        return true;
    };

    std::optional<double> best;
    const int m = static_cast<int>(planes.size());
    std::vector<int> pick(n);
    std::function<void(int, int)> combos = [&](int start, int depth) {
        if (depth == n) {
            // Solve the n x n system via Gaussian elimination.
            std::vector<std::vector<double>> mat(n, std::vector<double>(n + 1, 0.0));
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) mat[i][j] = planes[pick[i]].coef[j];
                mat[i][n] = planes[pick[i]].rhs;
            }
            for (int col = 0; col < n; ++col) {
                int piv = -1;
                double mag = 1e-9;
                for (int r = col; r < n; ++r)
                    if (std::abs(mat[r][col]) > mag) {
                        mag = std::abs(mat[r][col]);
                        piv = r;
                    }
                if (piv < 0) return;  // singular: no unique vertex
                std::swap(mat[col], mat[piv]);
                for (int r = 0; r < n; ++r) {
                    if (r == col) continue;
                    double f = mat[r][col] / mat[col][col];
                    for (int j = col; j <= n; ++j) mat[r][j] -= f * mat[col][j];
                }
            }
            std::vector<double> x(n);
            for (int i = 0; i < n; ++i) x[i] = mat[i][n] / mat[i][i];
            if (!feasible(x)) return;
            double obj = 0.0;
            for (int j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
            if (!best || obj < *best) best = obj;
            return;
        }
        for (int i = start; i <= m - (n - depth); ++i) {
            pick[depth] = i;
            combos(i + 1, depth + 1);
        }
    };
    if (n > 0) combos(0, 0);
    return best;
}

/// Brute-force optimum of an all-binary MILP by enumerating every 0/1
/// assignment. Returns nullopt when infeasible.
inline std::optional<double>
enum_binary_milp(const ccplan::MixedIntegerProgram& mip) {
    const int n = static_cast<int>(mip.lp.objective.size());
    std::optional<double> best;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<double> x(n);
        bool in_bounds = true;
        for (int j = 0; j < n; ++j) {
            x[j] = (mask >> j) & 1u;
            if (x[j] < mip.lp.lower[j] - 1e-9 || x[j] > mip.lp.upper[j] + 1e-9)
                in_bounds = false;
        }
        if (!in_bounds) continue;
        bool ok = true;
        for (const auto& row : mip.lp.rows) {
            double lhs = 0.0;
            for (size_t i = 0; i < row.indices.size(); ++i)
                lhs += row.coefficients[i] * x[row.indices[i]];
            if ((row.sense == ccplan::Sense::LessEqual && lhs > row.rhs + 1e-9) ||
                (row.sense == ccplan::Sense::GreaterEqual && lhs < row.rhs - 1e-9) ||
                (row.sense == ccplan::Sense::Equal && std::abs(lhs - row.rhs) > 1e-9)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += mip.lp.objective[j] * x[j];
        if (!best || obj < *best) best = obj;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Random instance generation (deterministic given seed)
// ---------------------------------------------------------------------------

/// splitmix64: small deterministic generator independent of the library RNG.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
};

/// A random tiny environment + commitment: <= 3 states/actions, K <= 3,
/// T <= 3, sparse transition rows, small-integer rewards, and a commitment
/// probability chosen so that every MDP can satisfy it (verified by the
/// independent max-reachability DP).
inline std::pair<Environment, Commitment> random_tiny_instance(Rng& rng) {
    for (;;) {
        const int S = 2 + rng.below(2);
        const int A = 2 + rng.below(2);
        const int K = 1 + rng.below(3);
        const int T = 1 + rng.below(3);
        std::vector<std::string> states, actions;
        for (int s = 0; s < S; ++s) states.push_back("s" + std::to_string(s));
        for (int a = 0; a < A; ++a) actions.push_back("a" + std::to_string(a));
        std::vector<ccplan::MdpTables> mdps;
        for (int k = 0; k < K; ++k) {
            ccplan::MdpTables m;
            m.transition.assign(S, std::vector<std::vector<double>>(
                                       A, std::vector<double>(S, 0.0)));
            m.reward.assign(S, std::vector<double>(A, 0.0));
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    if (rng.below(2) == 0) {
                        m.transition[s][a][rng.below(S)] = 1.0;
                    } else {
                        int s1 = rng.below(S), s2 = rng.below(S);
                        double p = 0.25 * (1 + rng.below(3));
                        if (s1 == s2) {
                            m.transition[s][a][s1] = 1.0;
                        } else {
                            m.transition[s][a][s1] = p;
                            m.transition[s][a][s2] = 1.0 - p;
                        }
                    }
                    m.reward[s][a] = rng.below(3);
                }
            mdps.push_back(std::move(m));
        }
        Environment env(states, actions, std::move(mdps), rng.below(S));
        std::vector<int> targets = {rng.below(S)};
        const double p_choices[3] = {0.0, 0.5, 1.0};
        Commitment c(targets, T, p_choices[rng.below(3)]);
        bool feasible = true;
        for (int k = 1; k <= env.num_mdps(); ++k)
            if (dp_max_reach(env, c, k, env.initial_state(), 0) <
                c.probability - 1e-12)
                feasible = false;
        if (feasible) return {std::move(env), std::move(c)};
    }
}

}  // namespace oracles

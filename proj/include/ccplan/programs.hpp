// Occupancy-measure program builders: the single-MDP commitment-constrained
// value LP, and the L-updates minimax-regret program with its MILP
// reformulation. Also the L-updates policy representation extracted from a
// solved program, with a JSON round trip.

#pragma once

#include "ccplan/lp.hpp"
#include "ccplan/model.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace ccplan {

// ---------------------------------------------------------------------------
// Single-MDP constrained value LP
// ---------------------------------------------------------------------------

/// Occupancy LP for one MDP k from (s_start, t_start) to the commitment
/// horizon T: maximize expected total reward subject to reaching the target
/// set at time T with probability at least p_req. Stored in minimization
/// form, so the optimal value is the negated LP objective.
struct OccupancyLp {
    LinearProgram lp;
    /// x[(t, s, a)]: occupancy of taking a in s at time t, t in [t_start, T).
    std::map<std::tuple<int, int, int>, int> x;
    /// terminal[s]: occupancy of s at time T.
    std::map<int, int> terminal;
    int t_start = 0;
    int horizon = 0;
};

inline OccupancyLp build_constrained_value_lp(const Environment& env, int k,
                                              int s_start, int t_start,
                                              const Commitment& c,
                                              double p_req) {
    const int T = c.horizon;
    if (t_start > T)
        throw std::invalid_argument("constrained value LP: start time beyond horizon");
    OccupancyLp out;
    out.t_start = t_start;
    out.horizon = T;
    LinearProgram& lp = out.lp;

    // Forward reachability keeps the variable set small.
    std::vector<std::vector<int>> reach(T - t_start + 1);
    {
        std::vector<char> cur(env.num_states(), 0);
        cur[s_start] = 1;
        for (int t = t_start; t <= T; ++t) {
            for (int s = 0; s < env.num_states(); ++s)
                if (cur[s]) reach[t - t_start].push_back(s);
            if (t == T) break;
            std::vector<char> next(env.num_states(), 0);
            for (int s = 0; s < env.num_states(); ++s) {
                if (!cur[s]) continue;
                for (int a = 0; a < env.num_actions(); ++a) {
                    const auto& row = env.transition_row(k, s, a);
                    for (int s2 = 0; s2 < env.num_states(); ++s2)
                        if (row[s2] > 0.0) next[s2] = 1;
                }
            }
            cur = std::move(next);
        }
    }

    for (int t = t_start; t < T; ++t)
        for (int s : reach[t - t_start])
            for (int a = 0; a < env.num_actions(); ++a)
                out.x[{t, s, a}] = lp.add_variable(
                    -env.reward(k, s, a), 0.0, kInfinity,
                    "x_" + std::to_string(t) + "_" + env.state_name(s) + "_" +
                        env.action_name(a));
    for (int s : reach[T - t_start])
        out.terminal[s] =
            lp.add_variable(0.0, 0.0, kInfinity, "w_" + env.state_name(s));

    // Flow conservation. The start layer has unit inflow at s_start.
    for (int t = t_start; t <= T; ++t) {
        for (int s : reach[t - t_start]) {
            ConstraintRow row;
            row.sense = Sense::Equal;
            row.rhs = (t == t_start) ? (s == s_start ? 1.0 : 0.0) : 0.0;
            row.name = "flow_" + std::to_string(t) + "_" + env.state_name(s);
            if (t == T) {
                row.add(out.terminal[s], 1.0);
            } else {
                for (int a = 0; a < env.num_actions(); ++a)
                    row.add(out.x[{t, s, a}], 1.0);
            }
            if (t > t_start) {
                for (int s2 : reach[t - 1 - t_start])
                    for (int a = 0; a < env.num_actions(); ++a) {
                        double p = env.transition(k, s2, a, s);
                        if (p > 0.0) row.add(out.x[{t - 1, s2, a}], -p);
                    }
            }
            lp.add_row(std::move(row));
        }
    }

    // Commitment: terminal mass on the target set.
    ConstraintRow commit;
    commit.sense = Sense::GreaterEqual;
    commit.rhs = p_req;
    commit.name = "commit";
    for (int s : reach[T - t_start])
        if (c.contains(s)) commit.add(out.terminal[s], 1.0);
    lp.add_row(std::move(commit));
    return out;
}

// ---------------------------------------------------------------------------
// L-updates policies
// ---------------------------------------------------------------------------

/// Canonical text key for a knowledge state: "t|state|k1,k2,...".
inline std::string knowledge_key(const Environment& env, const KnowledgeState& b) {
    std::string key = std::to_string(b.time) + "|" + env.state_name(b.env_state) + "|";
    for (size_t i = 0; i < b.kappa.size(); ++i) {
        if (i) key += ",";
        key += std::to_string(b.kappa[i]);
    }
    return key;
}

inline KnowledgeState parse_knowledge_key(const Environment& env,
                                          const std::string& key) {
    auto bar1 = key.find('|');
    auto bar2 = key.find('|', bar1 + 1);
    if (bar1 == std::string::npos || bar2 == std::string::npos)
        throw std::invalid_argument("bad knowledge-state key: " + key);
    KnowledgeState b;
    b.time = std::stoi(key.substr(0, bar1));
    b.env_state = env.state_index(key.substr(bar1 + 1, bar2 - bar1 - 1));
    std::istringstream ks(key.substr(bar2 + 1));
    std::string tok;
    while (std::getline(ks, tok, ',')) b.kappa.push_back(std::stoi(tok));
    if (b.kappa.empty()) throw std::invalid_argument("bad knowledge-state key: " + key);
    return b;
}

/// A deterministic L-updates policy: knowledge-state conditioned before the
/// lookahead boundary L, and for each boundary knowledge state a Markov rule
/// over (env-state, time) afterwards.
struct LUpdatesPolicy {
    int boundary = 0;  // L
    int horizon = 0;   // T
    /// Action at each pre-boundary knowledge state (times 0..L-1).
    std::map<KnowledgeState, int> pre;
    /// post[bL][(s, t)] = action for boundary state bL and t in [L, T).
    std::map<KnowledgeState, std::map<std::pair<int, int>, int>> post;

    /// Action at knowledge state b, given the boundary state bL on the
    /// current trajectory (ignored while b.time < boundary).
    int action_at(const KnowledgeState& b, const KnowledgeState& boundary_state) const {
        if (b.time < boundary) {
            auto it = pre.find(b);
            if (it == pre.end())
                throw std::out_of_range("policy undefined at pre-boundary state");
            return it->second;
        }
        auto bt = post.find(boundary_state);
        if (bt == post.end())
            throw std::out_of_range("policy undefined at boundary state");
        auto it = bt->second.find({b.env_state, b.time});
        if (it == bt->second.end())
            throw std::out_of_range("policy undefined at post-boundary point");
        return it->second;
    }
};

/// Policy JSON: entries map a knowledge-state key "t|s|sorted-kappa" (or,
/// after the boundary, a "t|s" point key under its boundary state) to an
/// action distribution {action name: probability}. Deterministic policies
/// serialize with probability 1 on the chosen action.
inline nlohmann::ordered_json serialize_policy(const Environment& env,
                                               const LUpdatesPolicy& pi) {
    nlohmann::ordered_json j;
    j["boundary"] = pi.boundary;
    j["horizon"] = pi.horizon;
    nlohmann::ordered_json pre = nlohmann::ordered_json::object();
    for (const auto& [b, a] : pi.pre)
        pre[knowledge_key(env, b)] = {{env.action_name(a), 1.0}};
    j["pre"] = std::move(pre);
    nlohmann::ordered_json post = nlohmann::ordered_json::object();
    for (const auto& [bl, rule] : pi.post) {
        nlohmann::ordered_json entries = nlohmann::ordered_json::object();
        for (const auto& [st, a] : rule)
            entries[std::to_string(st.second) + "|" + env.state_name(st.first)] = {
                {env.action_name(a), 1.0}};
        post[knowledge_key(env, bl)] = std::move(entries);
    }
    j["post"] = std::move(post);
    return j;
}

namespace detail {
inline int parse_action_entry(const Environment& env, const nlohmann::json& entry,
                              const std::string& where) {
    if (entry.is_string()) return env.action_index(entry.get<std::string>());
    if (!entry.is_object() || entry.empty())
        throw std::invalid_argument("policy JSON: bad action entry at " + where);
    int best = -1;
    double best_p = -1.0;
    for (const auto& [name, p] : entry.items()) {
        double pv = p.get<double>();
        if (pv > best_p) {
            best_p = pv;
            best = env.action_index(name);
        }
    }
    return best;
}
}  // namespace detail

inline LUpdatesPolicy parse_policy(const Environment& env, const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("policy JSON: ") + e.what());
    }
    for (const char* key : {"boundary", "horizon", "pre", "post"})
        if (!j.contains(key))
            throw std::invalid_argument(std::string("policy JSON: missing key '") +
                                        key + "'");
    LUpdatesPolicy pi;
    pi.boundary = j["boundary"].get<int>();
    pi.horizon = j["horizon"].get<int>();
    for (const auto& [key, a] : j["pre"].items())
        pi.pre[parse_knowledge_key(env, key)] =
            detail::parse_action_entry(env, a, key);
    for (const auto& [key, rule] : j["post"].items()) {
        auto& entries = pi.post[parse_knowledge_key(env, key)];
        for (const auto& [st, a] : rule.items()) {
            auto bar = st.find('|');
            if (bar == std::string::npos)
                throw std::invalid_argument("policy JSON: bad point key '" + st + "'");
            int t = std::stoi(st.substr(0, bar));
            int s = env.state_index(st.substr(bar + 1));
            entries[{s, t}] = detail::parse_action_entry(env, a, st);
        }
    }
    return pi;
}

// ---------------------------------------------------------------------------
// The minimax-regret L-updates program
// ---------------------------------------------------------------------------

/// The built program with the variable layout needed to read a policy back
/// out of a solution vector.
struct CclProgram {
    MixedIntegerProgram mip;
    int boundary = 0;  // absolute boundary time root.time + L
    int depth = 0;     // lookahead depth L
    int horizon = 0;   // T
    KnowledgeState root;
    /// Pre-boundary knowledge states by depth (layers[0] = {root}, up to L).
    KnowledgeLayer layers;

    int z_var = -1;
    std::map<int, int> u_var;  // per MDP index k

    /// y[(b, a, k)] for pre-boundary b with k in kappa(b).
    std::map<std::tuple<KnowledgeState, int, int>, int> y;
    /// delta_pre[(b, a)]: action indicator at pre-boundary b.
    std::map<std::pair<KnowledgeState, int>, int> delta_pre;
    /// x[(bL, s, t, a, k)] for boundary state bL, t in [L, T).
    std::map<std::tuple<KnowledgeState, int, int, int, int>, int> x;
    /// terminal[(bL, s, k)]: occupancy at the horizon.
    std::map<std::tuple<KnowledgeState, int, int>, int> terminal;
    /// delta_post[(bL, s, t, a)]: action indicator after the boundary.
    std::map<std::tuple<KnowledgeState, int, int, int>, int> delta_post;

    /// Per-MDP commitment-constrained optimal values used as regret targets.
    std::map<int, double> u_star;
};

/// Builds the minimax-regret program rooted at `root` (default: the initial
/// knowledge state) with lookahead depth L, i.e. boundary time root.time + L.
/// u_star[k] must hold the per-MDP constrained optimal values used as regret
/// targets, and p_map may override the commitment probability per MDP (used
/// by the iterative replanner); both are over k in kappa(root). The result
/// is a MILP (binary action indicators); dropping integrality gives the LP
/// relaxation over stochastic policies.
inline CclProgram build_ccl_program(const Environment& env, const Commitment& c,
                                    int L, const std::map<int, double>& u_star,
                                    const KnowledgeState& root,
                                    const std::map<int, double>& p_map) {
    const int T = c.horizon;
    if (L < 0 || root.time + L > T)
        throw std::invalid_argument("lookahead boundary must be in [root time, T]");
    const int bt = root.time + L;  // boundary time
    for (int k : root.kappa)
        if (!u_star.count(k))
            throw std::invalid_argument("missing constrained optimum for MDP " +
                                        std::to_string(k));
    auto p_req = [&](int k) {
        auto it = p_map.find(k);
        return it == p_map.end() ? c.probability : it->second;
    };

    CclProgram prog;
    prog.boundary = bt;
    prog.depth = L;
    prog.horizon = T;
    prog.root = root;
    prog.layers = expand_reachable(env, root, L);
    prog.u_star = u_star;
    LinearProgram& lp = prog.mip.lp;

    prog.z_var = lp.add_variable(1.0, 0.0, kInfinity, "z");
    for (int k : root.kappa)
        prog.u_var[k] = lp.add_variable(0.0, -kInfinity, kInfinity,
                                        "U_" + std::to_string(k));

    // Pre-boundary variables.
    for (int l = 0; l < L; ++l) {
        for (const auto& b : prog.layers.layers[l]) {
            for (int a = 0; a < env.num_actions(); ++a) {
                prog.delta_pre[{b, a}] = lp.add_variable(
                    0.0, 0.0, 1.0,
                    "d_" + knowledge_key(env, b) + "_" + env.action_name(a));
                prog.mip.mark_binary(prog.delta_pre[{b, a}]);
                for (int k : b.kappa)
                    prog.y[{b, a, k}] = lp.add_variable(
                        0.0, 0.0, 1.0,
                        "y_" + knowledge_key(env, b) + "_" + env.action_name(a) +
                            "_" + std::to_string(k));
            }
        }
    }

    // Post-boundary variables: per boundary state, per consistent MDP, over
    // the states forward-reachable under that MDP.
    std::map<std::pair<KnowledgeState, int>, std::vector<std::vector<int>>> reach;
    for (const auto& bl : prog.layers.layers[L]) {
        for (int k : bl.kappa) {
            auto& layers = reach[{bl, k}];
            layers.assign(T - bt + 1, {});
            std::vector<char> cur(env.num_states(), 0);
            cur[bl.env_state] = 1;
            for (int t = bt; t <= T; ++t) {
                for (int s = 0; s < env.num_states(); ++s)
                    if (cur[s]) layers[t - bt].push_back(s);
                if (t == T) break;
                std::vector<char> next(env.num_states(), 0);
                for (int s = 0; s < env.num_states(); ++s) {
                    if (!cur[s]) continue;
                    for (int a = 0; a < env.num_actions(); ++a) {
                        const auto& row = env.transition_row(k, s, a);
                        for (int s2 = 0; s2 < env.num_states(); ++s2)
                            if (row[s2] > 0.0) next[s2] = 1;
                    }
                }
                cur = std::move(next);
            }
        }
    }
    for (const auto& bl : prog.layers.layers[L]) {
        const std::string blkey = knowledge_key(env, bl);
        // Shared action indicators over the union of per-MDP reach sets.
        for (int t = bt; t < T; ++t) {
            std::vector<char> in_union(env.num_states(), 0);
            for (int k : bl.kappa)
                for (int s : reach[{bl, k}][t - bt]) in_union[s] = 1;
            for (int s = 0; s < env.num_states(); ++s) {
                if (!in_union[s]) continue;
                for (int a = 0; a < env.num_actions(); ++a) {
                    prog.delta_post[{bl, s, t, a}] = lp.add_variable(
                        0.0, 0.0, 1.0,
                        "D_" + blkey + "_" + env.state_name(s) + "_" +
                            std::to_string(t) + "_" + env.action_name(a));
                    prog.mip.mark_binary(prog.delta_post[{bl, s, t, a}]);
                }
            }
        }
        for (int k : bl.kappa) {
            const auto& layers = reach[{bl, k}];
            for (int t = bt; t < T; ++t)
                for (int s : layers[t - bt])
                    for (int a = 0; a < env.num_actions(); ++a)
                        prog.x[{bl, s, t, a, k}] = lp.add_variable(
                            0.0, 0.0, 1.0,
                            "x_" + blkey + "_" + env.state_name(s) + "_" +
                                std::to_string(t) + "_" + env.action_name(a) +
                                "_" + std::to_string(k));
            for (int s : layers[T - bt])
                prog.terminal[{bl, s, k}] = lp.add_variable(
                    0.0, 0.0, 1.0,
                    "w_" + blkey + "_" + env.state_name(s) + "_" + std::to_string(k));
        }
    }

    // Pre-boundary flow per MDP. The per-k inflow into a knowledge state is
    // the y-mass of its predecessors weighted by the observation
    // probabilities under k.
    for (int k : root.kappa) {
        ConstraintRow root_flow;
        root_flow.sense = Sense::Equal;
        root_flow.rhs = 1.0;
        root_flow.name = "rootflow_" + std::to_string(k);
        if (L == 0 && bt == T) {
            root_flow.add(prog.terminal[{root, root.env_state, k}], 1.0);
        } else if (L == 0) {
            // Degenerate boundary: the root is the (single) boundary state
            // and the unit inflow lands directly on its first x layer.
            for (int a = 0; a < env.num_actions(); ++a)
                root_flow.add(prog.x[{root, root.env_state, bt, a, k}], 1.0);
        } else {
            for (int a = 0; a < env.num_actions(); ++a)
                root_flow.add(prog.y[{prog.root, a, k}], 1.0);
        }
        lp.add_row(std::move(root_flow));
    }
    for (int l = 1; l <= L; ++l) {
        // Inflow terms from layer l-1 into each layer-l state, per MDP.
        std::map<std::pair<KnowledgeState, int>, ConstraintRow> inflow;
        for (const auto& b : prog.layers.layers[l - 1])
            for (int a = 0; a < env.num_actions(); ++a)
                for (const auto& succ : knowledge_successors(env, b, a))
                    for (int k : b.kappa) {
                        double p = succ.prob.at(k);
                        if (p > 0.0)
                            inflow[{succ.state, k}].add(prog.y[{b, a, k}], -p);
                    }
        for (const auto& b : prog.layers.layers[l]) {
            for (int k : b.kappa) {
                ConstraintRow row = inflow.count({b, k})
                                        ? std::move(inflow[{b, k}])
                                        : ConstraintRow{};
                row.sense = Sense::Equal;
                row.rhs = 0.0;
                row.name = "flow_" + knowledge_key(env, b) + "_" + std::to_string(k);
                if (l < L) {
                    for (int a = 0; a < env.num_actions(); ++a)
                        row.add(prog.y[{b, a, k}], 1.0);
                } else if (bt < T) {
                    for (int a = 0; a < env.num_actions(); ++a)
                        row.add(prog.x[{b, b.env_state, bt, a, k}], 1.0);
                } else {
                    row.add(prog.terminal[{b, b.env_state, k}], 1.0);
                }
                lp.add_row(std::move(row));
            }
        }
    }

    // Post-boundary flow.
    for (const auto& bl : prog.layers.layers[L]) {
        for (int k : bl.kappa) {
            const auto& layers = reach[{bl, k}];
            for (int t = bt + 1; t <= T; ++t) {
                for (int s : layers[t - bt]) {
                    ConstraintRow row;
                    row.sense = Sense::Equal;
                    row.rhs = 0.0;
                    row.name = "xflow_" + knowledge_key(env, bl) + "_" +
                               env.state_name(s) + "_" + std::to_string(t) + "_" +
                               std::to_string(k);
                    if (t == T) {
                        row.add(prog.terminal[{bl, s, k}], 1.0);
                    } else {
                        for (int a = 0; a < env.num_actions(); ++a)
                            row.add(prog.x[{bl, s, t, a, k}], 1.0);
                    }
                    for (int s2 : layers[t - 1 - bt])
                        for (int a = 0; a < env.num_actions(); ++a) {
                            double p = env.transition(k, s2, a, s);
                            if (p > 0.0) row.add(prog.x[{bl, s2, t - 1, a, k}], -p);
                        }
                    lp.add_row(std::move(row));
                }
            }
        }
    }

    // Commitment per MDP: terminal target mass across all boundary states
    // whose knowledge set still contains k.
    for (int k : root.kappa) {
        ConstraintRow row;
        row.sense = Sense::GreaterEqual;
        row.rhs = p_req(k);
        row.name = "commit_" + std::to_string(k);
        for (const auto& bl : prog.layers.layers[L]) {
            if (std::find(bl.kappa.begin(), bl.kappa.end(), k) == bl.kappa.end())
                continue;
            for (int s : reach[{bl, k}][T - bt])
                if (c.contains(s)) row.add(prog.terminal[{bl, s, k}], 1.0);
        }
        lp.add_row(std::move(row));
    }

    // Value definition and regret rows: U_k = total expected reward, and
    // z >= u_star(k) - U_k.
    for (int k : root.kappa) {
        ConstraintRow def;
        def.sense = Sense::Equal;
        def.rhs = 0.0;
        def.name = "value_" + std::to_string(k);
        def.add(prog.u_var[k], 1.0);
        for (int l = 0; l < L; ++l)
            for (const auto& b : prog.layers.layers[l]) {
                if (std::find(b.kappa.begin(), b.kappa.end(), k) == b.kappa.end())
                    continue;
                for (int a = 0; a < env.num_actions(); ++a) {
                    double r = env.reward(k, b.env_state, a);
                    if (r != 0.0) def.add(prog.y[{b, a, k}], -r);
                }
            }
        for (const auto& [key, var] : prog.x) {
            const auto& [bl, s, t, a, kk] = key;
            if (kk != k) continue;
            double r = env.reward(k, s, a);
            if (r != 0.0) def.add(var, -r);
        }
        lp.add_row(std::move(def));

        ConstraintRow regret;
        regret.sense = Sense::GreaterEqual;
        regret.rhs = u_star.at(k);
        regret.name = "regret_" + std::to_string(k);
        regret.add(prog.z_var, 1.0);
        regret.add(prog.u_var[k], 1.0);
        lp.add_row(std::move(regret));
    }

    // Action indicators: occupancies vanish unless the (single) indicator
    // for their action is on.
    for (const auto& [key, dvar] : prog.delta_pre) {
        const auto& [b, a] = key;
        for (int k : b.kappa) {
            ConstraintRow row;
            row.sense = Sense::LessEqual;
            row.rhs = 0.0;
            row.add(prog.y[{b, a, k}], 1.0);
            row.add(dvar, -1.0);
            lp.add_row(std::move(row));
        }
    }
    for (int l = 0; l < L; ++l)
        for (const auto& b : prog.layers.layers[l]) {
            ConstraintRow row;
            row.sense = Sense::LessEqual;
            row.rhs = 1.0;
            row.name = "one_" + knowledge_key(env, b);
            for (int a = 0; a < env.num_actions(); ++a)
                row.add(prog.delta_pre[{b, a}], 1.0);
            lp.add_row(std::move(row));
        }
    for (const auto& [key, dvar] : prog.delta_post) {
        const auto& [bl, s, t, a] = key;
        for (int k : bl.kappa) {
            auto it = prog.x.find({bl, s, t, a, k});
            if (it == prog.x.end()) continue;
            ConstraintRow row;
            row.sense = Sense::LessEqual;
            row.rhs = 0.0;
            row.add(it->second, 1.0);
            row.add(dvar, -1.0);
            lp.add_row(std::move(row));
        }
    }
    {
        std::map<std::tuple<KnowledgeState, int, int>, ConstraintRow> ones;
        for (const auto& [key, dvar] : prog.delta_post) {
            const auto& [bl, s, t, a] = key;
            ones[{bl, s, t}].add(dvar, 1.0);
        }
        for (auto& [key, row] : ones) {
            row.sense = Sense::LessEqual;
            row.rhs = 1.0;
            lp.add_row(std::move(row));
        }
    }

    return prog;
}

inline CclProgram build_ccl_program(const Environment& env, const Commitment& c,
                                    int L, const std::map<int, double>& u_star) {
    return build_ccl_program(env, c, L, u_star, initial_knowledge_state(env), {});
}

/// Reads an L-updates policy out of a solution vector. With integral action
/// indicators the indicator decides; otherwise (LP relaxation) the action
/// with the largest aggregate occupancy is chosen. Points with no occupancy
/// mass (unreachable under the policy) get the first action.
inline LUpdatesPolicy extract_policy(const Environment& env, const CclProgram& prog,
                                     const std::vector<double>& values) {
    LUpdatesPolicy pi;
    pi.boundary = prog.boundary;
    pi.horizon = prog.horizon;

    auto pick = [&](const std::vector<double>& indicator,
                    const std::vector<double>& mass) {
        for (int a = 0; a < env.num_actions(); ++a)
            if (indicator[a] > 1.0 - kIntTol) return a;
        int best = 0;
        for (int a = 1; a < env.num_actions(); ++a)
            if (mass[a] > mass[best] + kOptTol) best = a;
        return best;
    };

    for (int l = 0; l < prog.depth; ++l)
        for (const auto& b : prog.layers.layers[l]) {
            std::vector<double> ind(env.num_actions(), 0.0), mass(env.num_actions(), 0.0);
            for (int a = 0; a < env.num_actions(); ++a) {
                ind[a] = values[prog.delta_pre.at({b, a})];
                for (int k : b.kappa) mass[a] += values[prog.y.at({b, a, k})];
            }
            pi.pre[b] = pick(ind, mass);
        }
    for (const auto& bl : prog.layers.layers[prog.depth]) {
        auto& rule = pi.post[bl];
        for (int t = prog.boundary; t < prog.horizon; ++t) {
            for (int s = 0; s < env.num_states(); ++s) {
                if (!prog.delta_post.count({bl, s, t, 0})) continue;
                std::vector<double> ind(env.num_actions(), 0.0),
                    mass(env.num_actions(), 0.0);
                for (int a = 0; a < env.num_actions(); ++a) {
                    ind[a] = values[prog.delta_post.at({bl, s, t, a})];
                    for (int k : bl.kappa) {
                        auto it = prog.x.find({bl, s, t, a, k});
                        if (it != prog.x.end()) mass[a] += values[it->second];
                    }
                }
                rule[{s, t}] = pick(ind, mass);
            }
        }
    }
    return pi;
}

}  // namespace ccplan

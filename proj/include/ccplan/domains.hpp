// Built-in benchmark environments and a JSON file format for user-defined
// environments.

#pragma once

#include "ccplan/model.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ccplan {

/// Twin-States: two states A and B with deterministic transitions and
/// uncertain rewards. a0 swaps state with reward 0; a1 stays (reward 2 in A,
/// 3 in B); a2 stays with reward in {1,3,5} in A and {0,2,4} in B. The two
/// reward uncertainties are independent, so K = 9. The commitment is to be
/// in A at the horizon with probability one.
inline std::pair<Environment, Commitment> twin_states(int T) {
    if (T < 1) throw std::invalid_argument("twin_states: horizon must be >= 1");
    const std::vector<std::string> states = {"A", "B"};
    const std::vector<std::string> actions = {"a0", "a1", "a2"};
    const int A = 0, B = 1;
    std::vector<MdpTables> mdps;
    for (double ra : {1.0, 3.0, 5.0}) {
        for (double rb : {0.0, 2.0, 4.0}) {
            MdpTables m;
            m.transition.assign(2, std::vector<std::vector<double>>(
                                       3, std::vector<double>(2, 0.0)));
            m.reward.assign(2, std::vector<double>(3, 0.0));
            // a0 swaps, a1 and a2 stay.
            m.transition[A][0][B] = 1.0;
            m.transition[B][0][A] = 1.0;
            for (int a : {1, 2}) {
                m.transition[A][a][A] = 1.0;
                m.transition[B][a][B] = 1.0;
            }
            m.reward[A][1] = 2.0;
            m.reward[B][1] = 3.0;
            m.reward[A][2] = ra;
            m.reward[B][2] = rb;
            mdps.push_back(std::move(m));
        }
    }
    Environment env(states, actions, std::move(mdps), A);
    Commitment c({A}, T, 1.0);
    return {std::move(env), std::move(c)};
}

/// Slippery T-Maze: a horizontal corridor (cell "s", intermediate cells, the
/// start cell, and reward cell "r" at the far end) joined at "s" to a
/// vertical corridor ending in the commitment cell "c". Staying put in "r"
/// earns +1 per step. MDP k has slip_counts[k-1] consecutive slippery cells
/// adjacent to "s" ("s" itself is always slippery); movement from a slippery
/// cell succeeds with probability .8 and otherwise stays in place.
///
/// Default reproduction parameters: h_len=4, v_len=3, slip_counts={1,2,3},
/// T=10, p=0.6.
inline std::pair<Environment, Commitment>
slippery_tmaze(int h_len = 4, int v_len = 3,
               std::vector<int> slip_counts = {1, 2, 3}, int T = 10,
               double p = 0.6) {
    if (h_len < 2 || v_len < 1)
        throw std::invalid_argument("slippery_tmaze: corridor lengths too small");
    if (slip_counts.empty())
        throw std::invalid_argument("slippery_tmaze: empty slip count set");
    for (int n : slip_counts)
        if (n < 1 || n > h_len)
            throw std::invalid_argument("slippery_tmaze: slip count out of range");

    // Horizontal cells left to right: s = h0, h1, ..., h_{h_len-1}, r.
    // The agent starts in h_{h_len-1} (the cell with the dot, next to r).
    // Vertical cells below h1, the cell adjacent to s: v1, ..., c. The
    // commitment path from the dot therefore crosses the possibly-slippery
    // stretch h_{h_len-2}..h1 but never needs s itself, which is known to
    // be slippery in every candidate MDP.
    std::vector<std::string> states;
    for (int i = 0; i < h_len; ++i)
        states.push_back(i == 0 ? "s" : "h" + std::to_string(i));
    states.push_back("r");
    for (int j = 1; j < v_len; ++j) states.push_back("v" + std::to_string(j));
    states.push_back("c");
    const int r_cell = h_len;
    const int first_v = h_len + 1;
    const int c_cell = first_v + v_len - 1;
    const int start = h_len - 1;
    const std::vector<std::string> actions = {"left", "right", "up", "down"};
    const int n_states = static_cast<int>(states.size());

    const int junction = 1;  // vertical corridor hangs below h1
    auto neighbor = [&](int cell, int a) -> int {
        // left/right move along the horizontal corridor; down enters the
        // vertical corridor from the junction and continues along it; up
        // climbs back.
        if (cell <= h_len) {  // horizontal corridor incl. r
            if (a == 0) return cell > 0 ? cell - 1 : cell;
            if (a == 1) return cell < r_cell ? cell + 1 : cell;
            if (a == 3 && cell == junction) return first_v;
            return cell;
        }
        if (a == 3) return cell < c_cell ? cell + 1 : cell;
        if (a == 2) return cell == first_v ? junction : cell - 1;
        return cell;
    };

    std::vector<MdpTables> mdps;
    for (int count : slip_counts) {
        MdpTables m;
        m.transition.assign(n_states, std::vector<std::vector<double>>(
                                          4, std::vector<double>(n_states, 0.0)));
        m.reward.assign(n_states, std::vector<double>(4, 0.0));
        for (int cell = 0; cell < n_states; ++cell) {
            const bool slippery = cell < count;  // cells s, h1, ... adjacent to s
            for (int a = 0; a < 4; ++a) {
                int dst = neighbor(cell, a);
                if (dst == cell) {
                    m.transition[cell][a][cell] = 1.0;
                } else if (slippery) {
                    m.transition[cell][a][dst] = 0.8;
                    m.transition[cell][a][cell] = 0.2;
                } else {
                    m.transition[cell][a][dst] = 1.0;
                }
                if (cell == r_cell && dst == cell) m.reward[cell][a] = 1.0;
            }
        }
        mdps.push_back(std::move(m));
    }
    Environment env(states, actions, std::move(mdps), start);
    Commitment c({c_cell}, T, p);
    return {std::move(env), std::move(c)};
}

/// Four-state fixture with an absorbing goal D that cannot be reached from C
/// with probability .8, although the commitment from A at p=.8 is feasible.
/// Two reward functions disagree on the better action in C; the reward
/// observed at the first step reveals which applies.
inline std::pair<Environment, Commitment> fixture_observation4() {
    const std::vector<std::string> states = {"A", "B", "C", "D"};
    const std::vector<std::string> actions = {"a0", "a1"};
    const int A = 0, B = 1, C = 2, D = 3;
    std::vector<MdpTables> mdps;
    for (int variant : {1, 2}) {
        MdpTables m;
        m.transition.assign(4, std::vector<std::vector<double>>(
                                   2, std::vector<double>(4, 0.0)));
        m.reward.assign(4, std::vector<double>(2, 0.0));
        for (int a : {0, 1}) {
            m.transition[A][a][B] = 0.8;
            m.transition[A][a][C] = 0.2;
            m.transition[B][a][D] = 1.0;
            m.transition[C][a][D] = 0.5;
            m.transition[C][a][C] = 0.5;
            m.transition[D][a][D] = 1.0;
            // The first step's reward identifies the reward function.
            m.reward[A][a] = (variant == 1) ? 0.0 : 1.0;
        }
        m.reward[C][0] = (variant == 1) ? 4.0 : 0.0;
        m.reward[C][1] = (variant == 1) ? 0.0 : 4.0;
        mdps.push_back(std::move(m));
    }
    Environment env(states, actions, std::move(mdps), A);
    Commitment c({D}, 2, 0.8);
    return {std::move(env), std::move(c)};
}

/// The lookahead-boundary counterexample: four states, two actions, K = 2,
/// T = 3, vacuous commitment (p = 0). The initial branch is 0.9/0.1 versus
/// 0.1/0.9 and the only reward is earned in the absorbing state 3, by a0
/// under the first MDP and by a1 under the second.
inline std::pair<Environment, Commitment> fixture_theorem3() {
    const std::vector<std::string> states = {"0", "1", "2", "3"};
    const std::vector<std::string> actions = {"a0", "a1"};
    std::vector<MdpTables> mdps;
    for (int k : {1, 2}) {
        MdpTables m;
        m.transition.assign(4, std::vector<std::vector<double>>(
                                   2, std::vector<double>(4, 0.0)));
        m.reward.assign(4, std::vector<double>(2, 0.0));
        const double p1 = (k == 1) ? 0.9 : 0.1;
        for (int a : {0, 1}) {
            m.transition[0][a][1] = p1;
            m.transition[0][a][2] = 1.0 - p1;
            m.transition[1][a][3] = 1.0;
            m.transition[2][a][3] = 1.0;
            m.transition[3][a][3] = 1.0;
        }
        m.reward[3][k == 1 ? 0 : 1] = 1.0;
        mdps.push_back(std::move(m));
    }
    Environment env(states, actions, std::move(mdps), 0);
    Commitment c({3}, 3, 0.0);
    return {std::move(env), std::move(c)};
}

// ---------------------------------------------------------------------------
// JSON serialization. Schema: { states, actions, initial_state,
//   mdps: [ { transitions: {"s|a": {"s'": prob}}, rewards: {"s|a": value} } ],
//   commitment: { states, horizon, probability } }
// Missing transition rows are an error; there are no implicit self-loops.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json serialize_environment(const Environment& env,
                                                    const Commitment& c) {
    nlohmann::ordered_json j;
    j["states"] = env.state_names();
    j["actions"] = env.action_names();
    j["initial_state"] = env.state_name(env.initial_state());
    j["mdps"] = nlohmann::ordered_json::array();
    for (int k = 1; k <= env.num_mdps(); ++k) {
        nlohmann::ordered_json trans = nlohmann::ordered_json::object();
        nlohmann::ordered_json rew = nlohmann::ordered_json::object();
        for (int s = 0; s < env.num_states(); ++s) {
            for (int a = 0; a < env.num_actions(); ++a) {
                const std::string key = env.state_name(s) + "|" + env.action_name(a);
                nlohmann::ordered_json row = nlohmann::ordered_json::object();
                for (int s2 = 0; s2 < env.num_states(); ++s2) {
                    double p = env.transition(k, s, a, s2);
                    if (p != 0.0) row[env.state_name(s2)] = p;
                }
                trans[key] = std::move(row);
                rew[key] = env.reward(k, s, a);
            }
        }
        j["mdps"].push_back({{"transitions", std::move(trans)},
                             {"rewards", std::move(rew)}});
    }
    nlohmann::ordered_json jc;
    std::vector<std::string> targets;
    for (int s : c.target_states) targets.push_back(env.state_name(s));
    jc["states"] = targets;
    jc["horizon"] = c.horizon;
    jc["probability"] = c.probability;
    j["commitment"] = std::move(jc);
    return j;
}

inline std::pair<Environment, Commitment> parse_environment(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("environment JSON: ") + e.what());
    }
    for (const char* key : {"states", "actions", "initial_state", "mdps", "commitment"})
        if (!j.contains(key))
            throw std::invalid_argument(std::string("environment JSON: missing key '") +
                                        key + "'");
    std::vector<std::string> states = j["states"].get<std::vector<std::string>>();
    std::vector<std::string> actions = j["actions"].get<std::vector<std::string>>();
    auto state_idx = [&](const std::string& name, const std::string& where) {
        for (size_t i = 0; i < states.size(); ++i)
            if (states[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("environment JSON: unknown state '" + name +
                                    "' in " + where);
    };

    std::vector<MdpTables> mdps;
    int k = 0;
    for (const auto& jm : j["mdps"]) {
        ++k;
        MdpTables m;
        m.transition.assign(states.size(),
                            std::vector<std::vector<double>>(
                                actions.size(), std::vector<double>(states.size(), 0.0)));
        m.reward.assign(states.size(), std::vector<double>(actions.size(), 0.0));
        std::set<std::pair<int, int>> seen;
        if (!jm.contains("transitions") || !jm.contains("rewards"))
            throw std::invalid_argument("environment JSON: mdp " + std::to_string(k) +
                                        " missing 'transitions' or 'rewards'");
        for (const auto& [key, row] : jm["transitions"].items()) {
            auto bar = key.find('|');
            if (bar == std::string::npos)
                throw std::invalid_argument("environment JSON: bad key '" + key +
                                            "' (expected \"state|action\")");
            int s = state_idx(key.substr(0, bar), "transition key '" + key + "'");
            const std::string aname = key.substr(bar + 1);
            int a = -1;
            for (size_t i = 0; i < actions.size(); ++i)
                if (actions[i] == aname) a = static_cast<int>(i);
            if (a < 0)
                throw std::invalid_argument("environment JSON: unknown action '" +
                                            aname + "' in transition key '" + key + "'");
            for (const auto& [dst, p] : row.items())
                m.transition[s][a][state_idx(dst, "transition row '" + key + "'")] =
                    p.get<double>();
            seen.insert({s, a});
        }
        for (size_t s = 0; s < states.size(); ++s)
            for (size_t a = 0; a < actions.size(); ++a)
                if (!seen.count({static_cast<int>(s), static_cast<int>(a)}))
                    throw std::invalid_argument(
                        "environment JSON: mdp " + std::to_string(k) +
                        " missing transition row for '" + states[s] + "|" + actions[a] +
                        "'");
        for (const auto& [key, val] : jm["rewards"].items()) {
            auto bar = key.find('|');
            if (bar == std::string::npos)
                throw std::invalid_argument("environment JSON: bad reward key '" + key + "'");
            int s = state_idx(key.substr(0, bar), "reward key '" + key + "'");
            const std::string aname = key.substr(bar + 1);
            int a = -1;
            for (size_t i = 0; i < actions.size(); ++i)
                if (actions[i] == aname) a = static_cast<int>(i);
            if (a < 0)
                throw std::invalid_argument("environment JSON: unknown action '" +
                                            aname + "' in reward key '" + key + "'");
            m.reward[s][a] = val.get<double>();
        }
        mdps.push_back(std::move(m));
    }

    int s0 = state_idx(j["initial_state"].get<std::string>(), "initial_state");
    // Environment's constructor re-validates row sums and names the offender.
    Environment env(states, actions, std::move(mdps), s0);

    const auto& jc = j["commitment"];
    for (const char* key : {"states", "horizon", "probability"})
        if (!jc.contains(key))
            throw std::invalid_argument(
                std::string("environment JSON: commitment missing key '") + key + "'");
    std::vector<int> targets;
    for (const auto& name : jc["states"])
        targets.push_back(state_idx(name.get<std::string>(), "commitment states"));
    Commitment c(std::move(targets), jc["horizon"].get<int>(),
                 jc["probability"].get<double>());
    return {std::move(env), std::move(c)};
}

}  // namespace ccplan

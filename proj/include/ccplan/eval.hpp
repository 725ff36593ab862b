// Policy evaluation: exact expected utility / commitment probability under
// each candidate MDP, regret against per-MDP constrained optima, Monte Carlo
// simulation with a counter-based RNG, and CSV report rows.

#pragma once

#include "ccplan/model.hpp"
#include "ccplan/programs.hpp"

#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace ccplan {

struct Evaluation {
    double utility = 0.0;
    double commit_prob = 0.0;
};

/// Exact evaluation of an L-updates policy rooted at `root` under candidate
/// MDP k: forward distribution over knowledge states up to the boundary,
/// then a Markov forward pass per boundary state.
inline Evaluation evaluate_exact(const Environment& env, const Commitment& c,
                                 const LUpdatesPolicy& pi, int k,
                                 const KnowledgeState& root) {
    const int L = pi.boundary, T = pi.horizon;
    Evaluation out;

    // Knowledge-state distribution up to the boundary. Under the true MDP k
    // the knowledge set always contains k, so only such states carry mass.
    std::map<KnowledgeState, double> dist;
    dist[root] = 1.0;
    for (int t = root.time; t < L; ++t) {
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

    // Markov pass per boundary state.
    for (const auto& [bl, p_bl] : dist) {
        if (L == T) {
            if (c.contains(bl.env_state)) out.commit_prob += p_bl;
            continue;
        }
        const auto& rule = pi.post.at(bl);
        std::vector<double> sd(env.num_states(), 0.0);
        sd[bl.env_state] = 1.0;
        for (int t = L; t < T; ++t) {
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
            if (sd[s] > 0.0 && c.contains(s)) out.commit_prob += p_bl * sd[s];
    }
    return out;
}

inline Evaluation evaluate_exact(const Environment& env, const Commitment& c,
                                 const LUpdatesPolicy& pi, int k) {
    return evaluate_exact(env, c, pi, k, initial_knowledge_state(env));
}

/// Regret of a policy against per-MDP constrained optima, for every k.
struct RegretReport {
    std::map<int, Evaluation> per_mdp;
    std::map<int, double> regret;
    double max_regret = 0.0;
};

inline RegretReport regret_report(const Environment& env, const Commitment& c,
                                  const LUpdatesPolicy& pi,
                                  const std::map<int, double>& u_star) {
    RegretReport rep;
    for (int k : env.all_mdps()) {
        Evaluation e = evaluate_exact(env, c, pi, k);
        double rho = u_star.at(k) - e.utility;
        rep.per_mdp[k] = e;
        rep.regret[k] = rho;
        if (rho > rep.max_regret) rep.max_regret = rho;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {
/// Counter-based RNG: a splitmix64-style mix of (seed, episode, step) gives
/// an i.i.d.-quality uniform draw that is independent of call order.
inline double uniform_draw(std::uint64_t seed, std::uint64_t episode,
                           std::uint64_t step) {
    std::uint64_t z = seed;
    z ^= episode * 0x9E3779B97F4A7C15ULL + 0xBF58476D1CE4E5B9ULL;
    z ^= step * 0x94D049BB133111EBULL + 0xD6E8FEB86659FD93ULL;
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return (z >> 11) * 0x1.0p-53;
}

inline int sample_row(const std::vector<double>& row, double u) {
    double acc = 0.0;
    int last = 0;
    for (int s2 = 0; s2 < static_cast<int>(row.size()); ++s2) {
        if (row[s2] <= 0.0) continue;
        acc += row[s2];
        last = s2;
        if (u < acc) return s2;
    }
    return last;  // guard against accumulated rounding
}
}  // namespace detail

struct SimStats {
    int episodes = 0;
    double mean_utility = 0.0;
    double commit_frequency = 0.0;
    double std_error = 0.0;  // standard error of the mean return
};

/// Simulates episodes of an agent under MDP k. AgentFactory() must return a
/// fresh per-episode agent callable as agent(b) -> action index, where b is
/// the current knowledge state. Draws depend only on (seed, episode, step).
template <class AgentFactory>
SimStats simulate(const Environment& env, const Commitment& c, int k,
                  int episodes, std::uint64_t seed, AgentFactory&& factory) {
    const int T = c.horizon;
    SimStats stats;
    stats.episodes = episodes;
    double total = 0.0, total_sq = 0.0;
    int hits = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        auto agent = factory();
        KnowledgeState b = initial_knowledge_state(env);
        double ret = 0.0;
        for (int t = 0; t < T; ++t) {
            int a = agent(b);
            double r = env.reward(k, b.env_state, a);
            ret += r;
            double u = detail::uniform_draw(seed, ep, t);
            int s2 = detail::sample_row(env.transition_row(k, b.env_state, a), u);
            b = KnowledgeState{s2, t + 1,
                               filter_consistent(env, b.kappa, b.env_state, a, r, s2)};
        }
        total += ret;
        total_sq += ret * ret;
        if (c.contains(b.env_state)) ++hits;
    }
    if (episodes > 0) {
        stats.mean_utility = total / episodes;
        stats.commit_frequency = static_cast<double>(hits) / episodes;
        if (episodes > 1) {
            double var = (total_sq - total * total / episodes) / (episodes - 1);
            stats.std_error = std::sqrt(std::max(0.0, var) / episodes);
        }
    }
    return stats;
}

/// Per-episode agent adapter for an L-updates policy: remembers the boundary
/// knowledge state once the trajectory crosses the boundary.
struct LUpdatesAgent {
    const LUpdatesPolicy* pi;
    KnowledgeState boundary_state;
    bool crossed = false;

    int operator()(const KnowledgeState& b) {
        if (b.time >= pi->boundary && !crossed) {
            boundary_state = b;
            crossed = true;
        }
        return pi->action_at(b, boundary_state);
    }
};

// ---------------------------------------------------------------------------
// CSV report rows: method,L,horizon,k,utility,commit_prob,regret,max_regret
// ---------------------------------------------------------------------------

inline std::string csv_header() {
    return "method,L,horizon,k,utility,commit_prob,regret,max_regret";
}

namespace detail {
inline std::string csv_num(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << (v == 0.0 ? 0.0 : v);
    return os.str();
}
}  // namespace detail

inline std::vector<std::string> csv_rows(const std::string& method, int L,
                                         int horizon, const RegretReport& rep) {
    std::vector<std::string> rows;
    for (const auto& [k, e] : rep.per_mdp) {
        std::ostringstream os;
        os << method << "," << L << "," << horizon << "," << k << ","
           << detail::csv_num(e.utility) << "," << detail::csv_num(e.commit_prob)
           << "," << detail::csv_num(rep.regret.at(k)) << ","
           << detail::csv_num(rep.max_regret);
        rows.push_back(os.str());
    }
    return rows;
}

}  // namespace ccplan

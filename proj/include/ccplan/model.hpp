// Environment, commitment, history, and knowledge-state representations
// for planning against a set of candidate MDPs.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccplan {

/// Tolerance used when matching an observed reward against a reward table.
inline constexpr double kRewardMatchTol = 1e-9;
/// Tolerance for validating that transition rows sum to one.
inline constexpr double kProbSumTol = 1e-9;

/// A single candidate MDP: dense transition and reward tables over the
/// shared state/action spaces.
struct MdpTables {
    /// transition[s][a][s'] = probability of moving to s'.
    std::vector<std::vector<std::vector<double>>> transition;
    /// reward[s][a] = immediate reward of taking a in s.
    std::vector<std::vector<double>> reward;
};

/// The planning environment: K candidate MDPs over identical state and
/// action spaces, with a designated initial state.
///
/// MDP indices are 1-based throughout (k in 1..K), matching the usual
/// presentation of the problem; internal storage is 0-based.
class Environment {
  public:
    Environment(std::vector<std::string> state_names,
                std::vector<std::string> action_names,
                std::vector<MdpTables> mdps, int initial_state)
        : state_names_(std::move(state_names)),
          action_names_(std::move(action_names)), mdps_(std::move(mdps)),
          initial_state_(initial_state) {
        validate();
    }

    int num_states() const { return static_cast<int>(state_names_.size()); }
    int num_actions() const { return static_cast<int>(action_names_.size()); }
    int num_mdps() const { return static_cast<int>(mdps_.size()); }
    int initial_state() const { return initial_state_; }

    const std::string& state_name(int s) const { return state_names_.at(s); }
    const std::string& action_name(int a) const { return action_names_.at(a); }
    const std::vector<std::string>& state_names() const { return state_names_; }
    const std::vector<std::string>& action_names() const { return action_names_; }

    int state_index(const std::string& name) const {
        for (int s = 0; s < num_states(); ++s)
            if (state_names_[s] == name) return s;
        throw std::invalid_argument("unknown state: " + name);
    }
    int action_index(const std::string& name) const {
        for (int a = 0; a < num_actions(); ++a)
            if (action_names_[a] == name) return a;
        throw std::invalid_argument("unknown action: " + name);
    }

    /// Transition probability P(s'|s,a) in MDP k (k is 1-based).
    double transition(int k, int s, int a, int s2) const {
        return mdps_[k - 1].transition[s][a][s2];
    }
    const std::vector<double>& transition_row(int k, int s, int a) const {
        return mdps_[k - 1].transition[s][a];
    }
    /// Reward R_sa(k) (k is 1-based).
    double reward(int k, int s, int a) const {
        return mdps_[k - 1].reward[s][a];
    }

    const std::vector<MdpTables>& mdps() const { return mdps_; }

    /// All MDP indices, 1..K.
    std::vector<int> all_mdps() const {
        std::vector<int> ks(num_mdps());
        for (int i = 0; i < num_mdps(); ++i) ks[i] = i + 1;
        return ks;
    }

  private:
    void validate() const {
        if (mdps_.empty()) throw std::invalid_argument("environment needs K >= 1 MDPs");
        if (state_names_.empty() || action_names_.empty())
            throw std::invalid_argument("empty state or action set");
        if (initial_state_ < 0 || initial_state_ >= num_states())
            throw std::invalid_argument("initial state out of range");
        for (int k = 1; k <= num_mdps(); ++k) {
            const auto& m = mdps_[k - 1];
            if (static_cast<int>(m.transition.size()) != num_states() ||
                static_cast<int>(m.reward.size()) != num_states())
                throw std::invalid_argument("MDP " + std::to_string(k) +
                                            ": tables do not cover the state set");
            for (int s = 0; s < num_states(); ++s) {
                if (static_cast<int>(m.transition[s].size()) != num_actions() ||
                    static_cast<int>(m.reward[s].size()) != num_actions())
                    throw std::invalid_argument("MDP " + std::to_string(k) +
                                                ": tables do not cover the action set");
                for (int a = 0; a < num_actions(); ++a) {
                    double sum = 0.0;
                    for (double p : m.transition[s][a]) {
                        if (p < -kProbSumTol || p > 1.0 + kProbSumTol)
                            throw std::invalid_argument("probability out of [0,1]");
                        sum += p;
                    }
                    if (std::abs(sum - 1.0) > kProbSumTol)
                        throw std::invalid_argument(
                            "transition row does not sum to 1 at (k=" +
                            std::to_string(k) + ", s=" + state_names_[s] +
                            ", a=" + action_names_[a] + "): sum=" + std::to_string(sum));
                }
            }
        }
    }

    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
    std::vector<MdpTables> mdps_;
    int initial_state_;
};

/// A probabilistic commitment <Phi, T, p>: reach a state in target_states
/// at time horizon with probability at least probability, in every
/// candidate MDP.
struct Commitment {
    std::vector<int> target_states;  // sorted state indices, nonempty
    int horizon = 1;                 // number of actions T >= 1
    double probability = 0.0;        // p in [0,1]

    Commitment() = default;
    Commitment(std::vector<int> targets, int T, double p)
        : target_states(std::move(targets)), horizon(T), probability(p) {
        std::sort(target_states.begin(), target_states.end());
        if (target_states.empty())
            throw std::invalid_argument("commitment target set is empty");
        if (horizon < 1) throw std::invalid_argument("commitment horizon must be >= 1");
        if (probability < 0.0 || probability > 1.0)
            throw std::invalid_argument("commitment probability must be in [0,1]");
    }

    bool contains(int s) const {
        return std::binary_search(target_states.begin(), target_states.end(), s);
    }
};

/// One step of an execution trace: action taken, reward observed, state
/// reached.
struct HistoryStep {
    int action;
    double reward;
    int next_state;
};

/// An alternating history s0, a0, r1, s1, ..., s_t.
struct History {
    int initial_state = 0;
    std::vector<HistoryStep> steps;

    int length() const { return static_cast<int>(steps.size()); }
    int current_state() const {
        return steps.empty() ? initial_state : steps.back().next_state;
    }
};

/// Knowledge state <s, kappa> at time t: current env-state plus the set of
/// MDP indices still consistent with the observed history. Time is kept
/// explicit rather than folded into the env-state.
struct KnowledgeState {
    int env_state = 0;
    int time = 0;
    std::vector<int> kappa;  // sorted, nonempty, 1-based MDP indices

    friend bool operator==(const KnowledgeState& a, const KnowledgeState& b) {
        return a.time == b.time && a.env_state == b.env_state && a.kappa == b.kappa;
    }
    // Canonical ordering: (t, s, sorted kappa). Program variable indices
    // derive from this ordering, so it must be stable across runs.
    friend bool operator<(const KnowledgeState& a, const KnowledgeState& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.env_state != b.env_state) return a.env_state < b.env_state;
        return a.kappa < b.kappa;
    }
};

inline KnowledgeState initial_knowledge_state(const Environment& env) {
    return KnowledgeState{env.initial_state(), 0, env.all_mdps()};
}

/// One-step consistency update: keeps exactly the MDPs whose reward table
/// matches the observed reward and that assign positive probability to the
/// observed transition.
inline std::vector<int> filter_consistent(const Environment& env,
                                          const std::vector<int>& kappa, int s,
                                          int a, double r, int s2) {
    if (kappa.empty()) throw std::invalid_argument("filter_consistent: empty kappa");
    std::vector<int> out;
    for (int k : kappa) {
        if (std::abs(env.reward(k, s, a) - r) <= kRewardMatchTol &&
            env.transition(k, s, a, s2) > 0.0)
            out.push_back(k);
    }
    if (out.empty())
        throw std::runtime_error("observation inconsistent with all candidate MDPs");
    return out;
}

/// A knowledge-state successor: the next knowledge state and, for each MDP
/// index of the predecessor's kappa, the probability of reaching it.
struct KnowledgeSuccessor {
    KnowledgeState state;
    /// prob[k] for k in the predecessor's kappa (same order); zero whenever
    /// k is not in the successor's kappa.
    std::map<int, double> prob;
};

/// Expands one (b, a) pair into its successor knowledge states. Outcomes
/// are classed by the observed (reward, next-state) pair: two outcomes with
/// identical observations merge into one successor, since kappa depends only
/// on the observation.
inline std::vector<KnowledgeSuccessor>
knowledge_successors(const Environment& env, const KnowledgeState& b, int a) {
    // Outcome classes keyed by (reward class, next state). Rewards are
    // matched within kRewardMatchTol; the class representative is the first
    // reward encountered in sorted-k order.
    struct Outcome {
        double reward;
        int next_state;
        std::vector<int> kappa;
        std::map<int, double> prob;
    };
    std::vector<Outcome> outcomes;
    for (int k : b.kappa) {
        const double rk = env.reward(k, b.env_state, a);
        const auto& row = env.transition_row(k, b.env_state, a);
        for (int s2 = 0; s2 < env.num_states(); ++s2) {
            if (row[s2] <= 0.0) continue;
            Outcome* match = nullptr;
            for (auto& o : outcomes)
                if (o.next_state == s2 && std::abs(o.reward - rk) <= kRewardMatchTol) {
                    match = &o;
                    break;
                }
            if (!match) {
                outcomes.push_back(Outcome{rk, s2, {}, {}});
                match = &outcomes.back();
            }
            match->kappa.push_back(k);
            match->prob[k] = row[s2];
        }
    }
    std::vector<KnowledgeSuccessor> result;
    result.reserve(outcomes.size());
    for (auto& o : outcomes) {
        std::sort(o.kappa.begin(), o.kappa.end());
        KnowledgeSuccessor succ;
        succ.state = KnowledgeState{o.next_state, b.time + 1, o.kappa};
        for (int k : b.kappa) {
            auto it = o.prob.find(k);
            succ.prob[k] = (it == o.prob.end()) ? 0.0 : it->second;
        }
        result.push_back(std::move(succ));
    }
    std::sort(result.begin(), result.end(),
              [](const KnowledgeSuccessor& x, const KnowledgeSuccessor& y) {
                  return x.state < y.state;
              });
    return result;
}

/// Per-depth sets of knowledge states reachable from a root.
struct KnowledgeLayer {
    KnowledgeState root;
    /// layers[l] = sorted set of knowledge states reachable in exactly l
    /// actions; layers[0] = {root}.
    std::vector<std::vector<KnowledgeState>> layers;
};

/// Breadth-first closure of knowledge_successors over all actions, up to
/// depth L. Each layer is sorted by the canonical (t, s, kappa) order.
inline KnowledgeLayer expand_reachable(const Environment& env,
                                       const KnowledgeState& root, int L) {
    if (L < 0) throw std::invalid_argument("expand_reachable: negative depth");
    KnowledgeLayer result;
    result.root = root;
    result.layers.push_back({root});
    for (int l = 0; l < L; ++l) {
        std::vector<KnowledgeState> next;
        for (const auto& b : result.layers[l]) {
            for (int a = 0; a < env.num_actions(); ++a) {
                for (const auto& succ : knowledge_successors(env, b, a)) {
                    if (std::find(next.begin(), next.end(), succ.state) == next.end())
                        next.push_back(succ.state);
                }
            }
        }
        std::sort(next.begin(), next.end());
        result.layers.push_back(std::move(next));
    }
    return result;
}

}  // namespace ccplan

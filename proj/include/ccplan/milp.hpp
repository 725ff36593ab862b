// Best-first branch-and-bound solver for mixed binary programs, built on
// LP relaxations solved with the dense simplex.

#pragma once

#include "ccplan/lp.hpp"
#include "ccplan/simplex.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>
#include <queue>
#include <vector>

namespace ccplan {

/// Default cap on branch-and-bound nodes; override with the
/// REGRET_COMMIT_NODE_LIMIT environment variable.
inline long milp_node_limit() {
    if (const char* env = std::getenv("REGRET_COMMIT_NODE_LIMIT")) {
        long v = std::atol(env);
        if (v > 0) return v;
    }
    return 2'000'000;
}

/// Solves a mixed binary program to proven optimality by best-first
/// branch-and-bound on LP relaxations. Branching is on the most fractional
/// binary (ties by lowest variable index); node selection is by LP bound,
/// ties by node creation order. Deterministic.
inline SolveResult solve_milp(const MixedIntegerProgram& mip) {
    for (int v = 0; v < mip.lp.num_vars(); ++v)
        if (mip.binary(v) && (mip.lp.lower[v] < 0.0 || mip.lp.upper[v] > 1.0))
            throw std::invalid_argument("binary variable with bounds outside [0,1]");

    struct Node {
        std::vector<std::pair<int, double>> fixings;  // (var, value 0 or 1)
        double bound;
        long seq;
    };
    struct NodeOrder {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
            return a.seq > b.seq;
        }
    };

    const long node_limit = milp_node_limit();
    long nodes = 0, seq = 0;
    std::optional<SolveResult> incumbent;

    auto solve_node = [&](const Node& node) {
        LinearProgram lp = mip.lp;
        for (auto [v, val] : node.fixings) {
            lp.lower[v] = val;
            lp.upper[v] = val;
        }
        return solve_lp(lp);
    };

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(Node{{}, -kInfinity, seq++});

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (incumbent && node.bound >= incumbent->objective - kOptTol) continue;
        if (++nodes > node_limit)
            throw BudgetExhausted(incumbent ? *incumbent
                                            : SolveResult{SolveStatus::Infeasible, {}, 0.0});

        SolveResult rel = solve_node(node);
        if (rel.status == SolveStatus::Infeasible) continue;
        if (rel.status == SolveStatus::Unbounded) {
            // An unbounded relaxation at the root means the MILP itself is
            // unbounded or infeasible; report unbounded.
            if (node.fixings.empty()) return rel;
            continue;
        }
        // Relaxation bound must not exceed any integral solution's value.
        if (incumbent && rel.objective >= incumbent->objective - kOptTol) continue;

        // Most fractional binary, ties by lowest index.
        int branch_var = -1;
        double best_frac = kIntTol;
        for (int v = 0; v < mip.lp.num_vars(); ++v) {
            if (!mip.binary(v)) continue;
            double frac = std::abs(rel.values[v] - std::round(rel.values[v]));
            if (frac > best_frac) {
                best_frac = frac;
                branch_var = v;
            }
        }
        if (branch_var < 0) {
            // Integral within tolerance: round binaries exactly and accept.
            for (int v = 0; v < mip.lp.num_vars(); ++v)
                if (mip.binary(v)) rel.values[v] = std::round(rel.values[v]);
            if (!incumbent || rel.objective < incumbent->objective - kOptTol)
                incumbent = rel;
            continue;
        }
        for (double val : {0.0, 1.0}) {
            Node child;
            child.fixings = node.fixings;
            child.fixings.emplace_back(branch_var, val);
            child.bound = rel.objective;
            child.seq = seq++;
            open.push(child);
        }
    }

    if (!incumbent) return SolveResult{SolveStatus::Infeasible, {}, 0.0};
    return *incumbent;
}

}  // namespace ccplan

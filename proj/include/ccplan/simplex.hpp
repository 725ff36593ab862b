// Self-contained dense two-phase simplex solver for the desk-scale linear
// programs built by this library.

#pragma once

#include "ccplan/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ccplan {
namespace detail {

// Internal standard form: min c.x  s.t.  A x = b, x >= 0.
// Original variables are shifted by finite lower bounds; free variables are
// split into positive and negative parts; finite upper bounds become rows;
// inequality rows get slack columns in the tableau builder.
struct StandardForm {
    std::vector<std::vector<double>> a;  // structural part of each row
    std::vector<double> b;
    std::vector<Sense> sense;  // LessEqual or Equal after normalization
    std::vector<double> cost;
    int num_structural = 0;
    std::vector<int> pos_col;     // column of the (shifted) positive part
    std::vector<int> neg_col;     // column of the negative part, -1 if none
    std::vector<double> shift;    // finite lower-bound shift
};

inline StandardForm to_standard_form(const LinearProgram& lp) {
    StandardForm sf;
    const int n = lp.num_vars();
    sf.pos_col.resize(n);
    sf.neg_col.assign(n, -1);
    sf.shift.assign(n, 0.0);

    int col = 0;
    for (int v = 0; v < n; ++v) {
        sf.pos_col[v] = col++;
        if (lp.lower[v] == -kInfinity)
            sf.neg_col[v] = col++;
        else
            sf.shift[v] = lp.lower[v];
    }
    sf.num_structural = col;
    sf.cost.assign(col, 0.0);
    for (int v = 0; v < n; ++v) {
        sf.cost[sf.pos_col[v]] = lp.objective[v];
        if (sf.neg_col[v] >= 0) sf.cost[sf.neg_col[v]] = -lp.objective[v];
    }

    auto add_row = [&](const std::vector<double>& coef_by_var, Sense sense,
                       double rhs) {
        std::vector<double> row(sf.num_structural, 0.0);
        double adj = rhs;
        for (int v = 0; v < n; ++v) {
            double c = coef_by_var[v];
            if (c == 0.0) continue;
            row[sf.pos_col[v]] += c;
            if (sf.neg_col[v] >= 0) row[sf.neg_col[v]] -= c;
            adj -= c * sf.shift[v];
        }
        if (sense == Sense::GreaterEqual) {
            for (double& x : row) x = -x;
            adj = -adj;
            sense = Sense::LessEqual;
        }
        sf.a.push_back(std::move(row));
        sf.b.push_back(adj);
        sf.sense.push_back(sense);
    };

    std::vector<double> dense(n, 0.0);
    for (const auto& r : lp.rows) {
        std::fill(dense.begin(), dense.end(), 0.0);
        for (size_t i = 0; i < r.indices.size(); ++i)
            dense[r.indices[i]] += r.coefficients[i];
        add_row(dense, r.sense, r.rhs);
    }
    for (int v = 0; v < n; ++v) {
        if (lp.upper[v] == kInfinity) continue;
        std::fill(dense.begin(), dense.end(), 0.0);
        dense[v] = 1.0;
        add_row(dense, Sense::LessEqual, lp.upper[v]);
    }
    return sf;
}

// Dense simplex tableau with explicit basis. Entering-variable selection is
// Dantzig's most-negative rule (ties by lowest column) with a switch to
// Bland's rule after a run of degenerate pivots, which keeps iterations
// finite and the whole procedure deterministic.
class Tableau {
  public:
    // Builds the phase-1 tableau: slacks for <= rows, artificials wherever a
    // slack cannot serve as the initial basic variable.
    explicit Tableau(const StandardForm& sf) {
        m_ = static_cast<int>(sf.a.size());
        num_structural_ = sf.num_structural;
        // Count columns: structural + one slack per LessEqual row +
        // artificials (assigned lazily below).
        num_slacks_ = 0;
        for (Sense s : sf.sense) num_slacks_ += (s == Sense::LessEqual) ? 1 : 0;
        int cols = num_structural_ + num_slacks_;
        first_artificial_ = cols;

        rows_.assign(m_, std::vector<double>());
        basis_.assign(m_, -1);
        rhs_.assign(m_, 0.0);

        int slack = num_structural_;
        std::vector<int> needs_artificial;
        for (int i = 0; i < m_; ++i) {
            rows_[i].assign(cols, 0.0);
            double sign = (sf.b[i] < 0.0) ? -1.0 : 1.0;
            for (int j = 0; j < num_structural_; ++j)
                rows_[i][j] = sign * sf.a[i][j];
            rhs_[i] = sign * sf.b[i];
            if (sf.sense[i] == Sense::LessEqual) {
                rows_[i][slack] = sign * 1.0;
                if (sign > 0.0)
                    basis_[i] = slack;
                else
                    needs_artificial.push_back(i);
                ++slack;
            } else {
                needs_artificial.push_back(i);
            }
        }
        num_artificials_ = static_cast<int>(needs_artificial.size());
        cols += num_artificials_;
        for (auto& r : rows_) r.resize(cols, 0.0);
        int art = first_artificial_;
        for (int i : needs_artificial) {
            rows_[i][art] = 1.0;
            basis_[i] = art;
            ++art;
        }
        n_ = cols;
    }

    int num_cols() const { return n_; }
    int first_artificial() const { return first_artificial_; }

    // Minimizes the given cost vector (padded with zeros) from the current
    // basis. allow_cols limits the eligible entering columns. Returns false
    // if unbounded.
    bool minimize(const std::vector<double>& cost, int allow_cols) {
        // Reduced-cost row: z_j = c_j - c_B . B^-1 A_j, maintained by pivots.
        obj_.assign(n_ + 1, 0.0);
        for (int j = 0; j < std::min<int>(allow_cols, cost.size()); ++j)
            obj_[j] = cost[j];
        for (int i = 0; i < m_; ++i) {
            int bv = basis_[i];
            double cb = (bv < static_cast<int>(cost.size())) ? cost[bv] : 0.0;
            if (cb == 0.0) continue;
            for (int j = 0; j < n_; ++j) obj_[j] -= cb * rows_[i][j];
            obj_[n_] -= cb * rhs_[i];
        }
        int degenerate_run = 0;
        const int kBlandTrigger = 40;
        while (true) {
            int enter = -1;
            if (degenerate_run < kBlandTrigger) {
                double best = -kOptTol;
                for (int j = 0; j < allow_cols; ++j)
                    if (obj_[j] < best) {
                        best = obj_[j];
                        enter = j;
                    }
            } else {
                for (int j = 0; j < allow_cols; ++j)
                    if (obj_[j] < -kOptTol) {
                        enter = j;
                        break;
                    }
            }
            if (enter < 0) return true;  // optimal
            // Ratio test; ties by lowest basic-variable index (Bland).
            int leave = -1;
            double best_ratio = 0.0;
            for (int i = 0; i < m_; ++i) {
                double aij = rows_[i][enter];
                if (aij <= kOptTol) continue;
                double ratio = rhs_[i] / aij;
                if (leave < 0 || ratio < best_ratio - kOptTol ||
                    (ratio < best_ratio + kOptTol && basis_[i] < basis_[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false;  // unbounded
            if (best_ratio <= kOptTol)
                ++degenerate_run;
            else
                degenerate_run = 0;
            pivot(leave, enter);
        }
    }

    // Drives artificial variables out of the basis after phase 1. Rows where
    // no structural pivot exists are redundant and are blanked.
    void purge_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < first_artificial_) continue;
            int enter = -1;
            for (int j = 0; j < first_artificial_; ++j)
                if (std::abs(rows_[i][j]) > 1e-9) {
                    enter = j;
                    break;
                }
            if (enter >= 0) {
                pivot(i, enter);
            } else {
                std::fill(rows_[i].begin(), rows_[i].end(), 0.0);
                rhs_[i] = 0.0;
                basis_[i] = -2;  // redundant row marker
            }
        }
    }

    double objective_value() const { return -obj_[n_]; }

    std::vector<double> solution() const {
        std::vector<double> x(n_, 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= 0) x[basis_[i]] = rhs_[i];
        return x;
    }

  private:
    void pivot(int row, int col) {
        double p = rows_[row][col];
        for (int j = 0; j < n_; ++j) rows_[row][j] /= p;
        rhs_[row] /= p;
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            double f = rows_[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j < n_; ++j) rows_[i][j] -= f * rows_[row][j];
            rhs_[i] -= f * rhs_[row];
            if (rhs_[i] < 0.0 && rhs_[i] > -1e-11) rhs_[i] = 0.0;
        }
        double f = obj_[col];
        if (f != 0.0) {
            for (int j = 0; j < n_; ++j) obj_[j] -= f * rows_[row][j];
            obj_[n_] -= f * rhs_[row];
        }
        basis_[row] = col;
    }

    int m_ = 0, n_ = 0;
    int num_structural_ = 0, num_slacks_ = 0, num_artificials_ = 0;
    int first_artificial_ = 0;
    std::vector<std::vector<double>> rows_;
    std::vector<double> rhs_;
    std::vector<double> obj_;
    std::vector<int> basis_;
};

}  // namespace detail

/// Solves a linear program with the two-phase simplex method. The result is
/// deterministic for a given input; infeasible and unbounded programs are
/// reported through the status, not as errors.
inline SolveResult solve_lp(const LinearProgram& lp) {
    detail::StandardForm sf = detail::to_standard_form(lp);
    detail::Tableau tab(sf);

    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1_cost(tab.num_cols(), 0.0);
    for (int j = tab.first_artificial(); j < tab.num_cols(); ++j)
        phase1_cost[j] = 1.0;
    if (!tab.minimize(phase1_cost, tab.num_cols()))
        throw std::logic_error("phase-1 simplex reported unbounded");
    if (tab.objective_value() > 1e-7) return SolveResult{SolveStatus::Infeasible, {}, 0.0};
    tab.purge_artificials();

    // Phase 2: minimize the real cost over non-artificial columns.
    std::vector<double> phase2_cost(sf.cost);
    phase2_cost.resize(tab.num_cols(), 0.0);
    if (!tab.minimize(phase2_cost, tab.first_artificial()))
        return SolveResult{SolveStatus::Unbounded, {}, 0.0};

    std::vector<double> std_x = tab.solution();
    SolveResult res;
    res.status = SolveStatus::Optimal;
    res.values.assign(lp.num_vars(), 0.0);
    for (int v = 0; v < lp.num_vars(); ++v) {
        double x = std_x[sf.pos_col[v]];
        if (sf.neg_col[v] >= 0) x -= std_x[sf.neg_col[v]];
        res.values[v] = x + sf.shift[v];
    }
    res.objective = 0.0;
    for (int v = 0; v < lp.num_vars(); ++v)
        res.objective += lp.objective[v] * res.values[v];
    return res;
}

}  // namespace ccplan

// Solver-facing program model: linear programs, mixed-integer programs,
// solve results, and a CPLEX-LP-style text dump for debugging.

#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccplan {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
/// Primal feasibility tolerance for accepting a solution.
inline constexpr double kFeasTol = 1e-7;
/// Integrality tolerance for binary variables.
inline constexpr double kIntTol = 1e-6;
/// Reduced-cost (optimality) tolerance for the simplex method.
inline constexpr double kOptTol = 1e-9;

enum class Sense { LessEqual, Equal, GreaterEqual };

/// One sparse constraint row: sum of coef*var  (sense)  rhs.
struct ConstraintRow {
    std::vector<int> indices;
    std::vector<double> coefficients;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
    std::string name;  // optional, used by the LP text dump

    void add(int var, double coef) {
        if (coef == 0.0) return;
        indices.push_back(var);
        coefficients.push_back(coef);
    }
};

/// A linear program in minimization form with per-variable bounds.
/// Default bounds are [0, +inf).
struct LinearProgram {
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<ConstraintRow> rows;
    std::vector<std::string> var_names;  // optional

    int num_vars() const { return static_cast<int>(objective.size()); }

    /// Appends a variable and returns its index.
    int add_variable(double cost, double lb = 0.0, double ub = kInfinity,
                     std::string name = {}) {
        objective.push_back(cost);
        lower.push_back(lb);
        upper.push_back(ub);
        var_names.push_back(std::move(name));
        return num_vars() - 1;
    }

    void add_row(ConstraintRow row) {
        for (int i : row.indices)
            if (i < 0 || i >= num_vars())
                throw std::invalid_argument("constraint references unknown variable");
        rows.push_back(std::move(row));
    }

    const std::string& name_of(int v) const { return var_names[v]; }
};

/// A linear program plus integrality flags marking binary variables.
struct MixedIntegerProgram {
    LinearProgram lp;
    std::vector<char> is_binary;  // size = lp.num_vars()

    void mark_binary(int var) {
        if (static_cast<int>(is_binary.size()) < lp.num_vars())
            is_binary.resize(lp.num_vars(), 0);
        if (lp.lower[var] < 0.0 || lp.upper[var] > 1.0)
            throw std::invalid_argument("binary variable bounds must be within [0,1]");
        is_binary[var] = 1;
    }
    bool binary(int var) const {
        return var < static_cast<int>(is_binary.size()) && is_binary[var];
    }
    int num_binaries() const {
        int n = 0;
        for (char b : is_binary) n += b != 0;
        return n;
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> values;
    double objective = 0.0;
};

/// Thrown by the MILP solver when the node budget runs out; carries the best
/// incumbent found so far (status Optimal iff any incumbent exists).
struct BudgetExhausted : std::runtime_error {
    SolveResult incumbent;
    explicit BudgetExhausted(SolveResult best)
        : std::runtime_error("budget exhausted"), incumbent(std::move(best)) {}
};

namespace detail {
inline std::string lp_var_name(const LinearProgram& lp, int v) {
    if (!lp.var_names[v].empty()) return lp.var_names[v];
    return "x" + std::to_string(v);
}

inline void write_lp_terms(std::ostream& os, const LinearProgram& lp,
                           const std::vector<int>& idx,
                           const std::vector<double>& coef) {
    bool first = true;
    for (size_t i = 0; i < idx.size(); ++i) {
        double c = coef[i];
        if (first) {
            if (c < 0) os << "- ";
            first = false;
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        double mag = std::abs(c);
        if (mag != 1.0) os << mag << " ";
        os << lp_var_name(lp, idx[i]);
    }
    if (first) os << "0 " << lp_var_name(lp, 0);
}
}  // namespace detail

/// Writes the program in CPLEX-LP text format (Minimize / Subject To /
/// Bounds / Binary sections) for cross-checking against external solvers.
inline void write_lp_format(std::ostream& os, const MixedIntegerProgram& mip,
                            const std::string& name = "program") {
    const LinearProgram& lp = mip.lp;
    os << "\\ " << name << "\n";
    os << "Minimize\n obj:";
    bool any = false;
    for (int v = 0; v < lp.num_vars(); ++v) {
        double c = lp.objective[v];
        if (c == 0.0) continue;
        os << (c < 0 ? " - " : (any ? " + " : " "));
        if (std::abs(c) != 1.0) os << std::abs(c) << " ";
        os << detail::lp_var_name(lp, v);
        any = true;
    }
    if (!any) os << " 0 " << detail::lp_var_name(lp, 0);
    os << "\nSubject To\n";
    for (size_t r = 0; r < lp.rows.size(); ++r) {
        const auto& row = lp.rows[r];
        os << " " << (row.name.empty() ? "c" + std::to_string(r) : row.name) << ": ";
        detail::write_lp_terms(os, lp, row.indices, row.coefficients);
        switch (row.sense) {
            case Sense::LessEqual: os << " <= "; break;
            case Sense::Equal: os << " = "; break;
            case Sense::GreaterEqual: os << " >= "; break;
        }
        os << row.rhs << "\n";
    }
    os << "Bounds\n";
    for (int v = 0; v < lp.num_vars(); ++v) {
        double lo = lp.lower[v], hi = lp.upper[v];
        if (lo == 0.0 && hi == kInfinity) continue;
        os << " ";
        if (lo == -kInfinity && hi == kInfinity) {
            os << detail::lp_var_name(lp, v) << " free\n";
            continue;
        }
        if (lo == -kInfinity)
            os << "-inf";
        else
            os << lo;
        os << " <= " << detail::lp_var_name(lp, v) << " <= ";
        if (hi == kInfinity)
            os << "+inf";
        else
            os << hi;
        os << "\n";
    }
    bool any_bin = false;
    for (int v = 0; v < lp.num_vars(); ++v) {
        if (!mip.binary(v)) continue;
        if (!any_bin) {
            os << "Binary\n";
            any_bin = true;
        }
        os << " " << detail::lp_var_name(lp, v) << "\n";
    }
    os << "End\n";
}

inline std::string to_lp_format(const MixedIntegerProgram& mip,
                                const std::string& name = "program") {
    std::ostringstream os;
    write_lp_format(os, mip, name);
    return os.str();
}

inline std::string to_lp_format(const LinearProgram& lp,
                                const std::string& name = "program") {
    MixedIntegerProgram mip;
    mip.lp = lp;
    return to_lp_format(mip, name);
}

/// Checks primal feasibility of a value vector within kFeasTol.
inline bool check_feasible(const LinearProgram& lp, const std::vector<double>& x,
                           double tol = kFeasTol) {
    for (int v = 0; v < lp.num_vars(); ++v) {
        if (x[v] < lp.lower[v] - tol) return false;
        if (x[v] > lp.upper[v] + tol) return false;
    }
    for (const auto& row : lp.rows) {
        double lhs = 0.0;
        for (size_t i = 0; i < row.indices.size(); ++i)
            lhs += row.coefficients[i] * x[row.indices[i]];
        switch (row.sense) {
            case Sense::LessEqual:
                if (lhs > row.rhs + tol) return false;
                break;
            case Sense::Equal:
                if (std::abs(lhs - row.rhs) > tol) return false;
                break;
            case Sense::GreaterEqual:
                if (lhs < row.rhs - tol) return false;
                break;
        }
    }
    return true;
}

}  // namespace ccplan

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccplan/milp.hpp"
#include "ccplan/simplex.hpp"
#include "oracles.hpp"

#include <sstream>

using namespace ccplan;

TEST_CASE("lp: minimize x subject to x >= 3") {
    LinearProgram lp;
    int x = lp.add_variable(1.0);
    ConstraintRow row;
    row.sense = Sense::GreaterEqual;
    row.rhs = 3.0;
    row.add(x, 1.0);
    lp.add_row(row);

    SolveResult res = solve_lp(lp);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.values[x] == doctest::Approx(3.0));
    CHECK(res.objective == doctest::Approx(3.0));
}

TEST_CASE("lp: maximize x + y over the unit simplex") {
    LinearProgram lp;
    int x = lp.add_variable(-1.0);
    int y = lp.add_variable(-1.0);
    ConstraintRow row;
    row.sense = Sense::LessEqual;
    row.rhs = 1.0;
    row.add(x, 1.0);
    row.add(y, 1.0);
    lp.add_row(row);

    SolveResult res = solve_lp(lp);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(-1.0));
}

TEST_CASE("lp: infeasible and unbounded statuses are reported") {
    LinearProgram infeasible;
    int x = infeasible.add_variable(1.0, 0.0, 1.0);
    ConstraintRow row;
    row.sense = Sense::GreaterEqual;
    row.rhs = 2.0;
    row.add(x, 1.0);
    infeasible.add_row(row);
    CHECK(solve_lp(infeasible).status == SolveStatus::Infeasible);

    LinearProgram unbounded;
    unbounded.add_variable(-1.0);  // minimize -x, x >= 0, no rows
    CHECK(solve_lp(unbounded).status == SolveStatus::Unbounded);
}

TEST_CASE("lp: determinism of repeated solves") {
    LinearProgram lp;
    int x = lp.add_variable(-2.0, 0.0, 4.0);
    int y = lp.add_variable(-3.0, 0.0, 4.0);
    ConstraintRow row;
    row.sense = Sense::LessEqual;
    row.rhs = 5.0;
    row.add(x, 1.0);
    row.add(y, 2.0);
    lp.add_row(row);

    SolveResult first = solve_lp(lp);
    REQUIRE(first.status == SolveStatus::Optimal);
    for (int i = 0; i < 5; ++i) {
        SolveResult again = solve_lp(lp);
        CHECK(again.objective == first.objective);
        CHECK(again.values == first.values);
    }
}

TEST_CASE("lp: random bounded programs match vertex enumeration") {
    oracles::Rng rng(7041);
    int solved = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + rng.below(4);       // up to 6 variables
        const int rows = 1 + rng.below(5);    // up to ~6 rows
        LinearProgram lp;
        for (int j = 0; j < n; ++j)
            lp.add_variable(rng.below(9) - 4, 0.0, 1 + rng.below(4));
        for (int i = 0; i < rows; ++i) {
            ConstraintRow row;
            int kind = rng.below(3);
            row.sense = kind == 0 ? Sense::LessEqual
                        : kind == 1 ? Sense::GreaterEqual
                                    : Sense::Equal;
            for (int j = 0; j < n; ++j)
                if (rng.below(2)) row.add(j, rng.below(7) - 3);
            row.rhs = rng.below(9) - 2;
            if (row.indices.empty()) row.add(rng.below(n), 1.0);
            lp.add_row(row);
        }

        SolveResult res = solve_lp(lp);
        auto oracle = oracles::vertex_enum_lp(lp);
        if (!oracle) {
            CHECK(res.status == SolveStatus::Infeasible);
            continue;
        }
        REQUIRE(res.status == SolveStatus::Optimal);
        CHECK(res.objective == doctest::Approx(*oracle).epsilon(1e-7));
        ++solved;
    }
    CHECK(solved > 50);  // the generator must exercise the optimal path
}

TEST_CASE("milp: integrality cuts a fractional relaxation") {
    MixedIntegerProgram mip;
    int x = mip.lp.add_variable(-1.0, 0.0, 1.0);
    mip.is_binary.push_back(true);
    ConstraintRow row;
    row.sense = Sense::LessEqual;
    row.rhs = 0.5;
    row.add(x, 1.0);
    mip.lp.add_row(row);

    SolveResult res = solve_milp(mip);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.values[x] == doctest::Approx(0.0));
    CHECK(res.objective == doctest::Approx(0.0));
}

TEST_CASE("milp: two-item knapsack") {
    MixedIntegerProgram mip;
    int a = mip.lp.add_variable(-3.0, 0.0, 1.0);
    int b = mip.lp.add_variable(-2.0, 0.0, 1.0);
    mip.is_binary = {true, true};
    ConstraintRow row;
    row.sense = Sense::LessEqual;
    row.rhs = 1.0;
    row.add(a, 1.0);
    row.add(b, 1.0);
    mip.lp.add_row(row);

    SolveResult res = solve_milp(mip);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(-3.0));
    CHECK(res.values[a] == doctest::Approx(1.0));
    CHECK(res.values[b] == doctest::Approx(0.0));
}

TEST_CASE("milp: relaxation bounds the integer optimum") {
    oracles::Rng rng(90125);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + rng.below(5);
        MixedIntegerProgram mip;
        for (int j = 0; j < n; ++j) {
            mip.lp.add_variable(rng.below(9) - 4, 0.0, 1.0);
            mip.is_binary.push_back(true);
        }
        for (int i = 0, rows = 1 + rng.below(4); i < rows; ++i) {
            ConstraintRow row;
            row.sense = rng.below(2) ? Sense::LessEqual : Sense::GreaterEqual;
            for (int j = 0; j < n; ++j)
                if (rng.below(2)) row.add(j, rng.below(5) - 2);
            row.rhs = rng.below(5) - 1;
            if (row.indices.empty()) row.add(rng.below(n), 1.0);
            mip.lp.add_row(row);
        }

        SolveResult milp_res = solve_milp(mip);
        auto oracle = oracles::enum_binary_milp(mip);
        if (!oracle) {
            CHECK(milp_res.status == SolveStatus::Infeasible);
            continue;
        }
        REQUIRE(milp_res.status == SolveStatus::Optimal);
        CHECK(milp_res.objective == doctest::Approx(*oracle).epsilon(1e-9));
        // All binaries integral, relaxation below the integer optimum.
        for (int j = 0; j < n; ++j)
            CHECK(std::abs(milp_res.values[j] - std::round(milp_res.values[j])) <
                  kIntTol);
        SolveResult relax = solve_lp(mip.lp);
        REQUIRE(relax.status == SolveStatus::Optimal);
        CHECK(relax.objective <= milp_res.objective + 1e-7);
    }
}

TEST_CASE("milp: node limit reports budget exhaustion with an incumbent") {
    // A small feasible instance with an artificially tiny node budget.
    MixedIntegerProgram mip;
    for (int j = 0; j < 8; ++j) {
        mip.lp.add_variable(-(j + 1), 0.0, 1.0);
        mip.is_binary.push_back(true);
    }
    ConstraintRow row;
    row.sense = Sense::LessEqual;
    row.rhs = 3.5;
    for (int j = 0; j < 8; ++j) row.add(j, 1.0);
    mip.lp.add_row(row);

    ::setenv("REGRET_COMMIT_NODE_LIMIT", "1", 1);
    bool threw = false;
    try {
        solve_milp(mip);
    } catch (const BudgetExhausted&) {
        threw = true;
    }
    ::unsetenv("REGRET_COMMIT_NODE_LIMIT");
    CHECK(threw);

    SolveResult res = solve_milp(mip);  // full budget solves it
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(-21.0));  // items 8,7,6 (values 8+7+6)
}

TEST_CASE("lp text dump covers all sections") {
    MixedIntegerProgram mip;
    mip.lp.add_variable(1.0, 0.0, 2.0, "x");
    mip.lp.add_variable(-1.0, 0.0, 1.0, "d");
    mip.is_binary = {false, true};
    ConstraintRow row;
    row.sense = Sense::GreaterEqual;
    row.rhs = 1.0;
    row.name = "cover";
    row.add(0, 1.0);
    row.add(1, 1.0);
    mip.lp.add_row(row);

    std::ostringstream os;
    write_lp_format(os, mip, "demo");
    std::string text = os.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("Binary") != std::string::npos);
    CHECK(text.find("cover") != std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccplan/domains.hpp"
#include "ccplan/model.hpp"
#include "oracles.hpp"

#include <set>

using namespace ccplan;

TEST_CASE("twin-states structure") {
    auto [env, c] = twin_states(3);
    CHECK(env.num_mdps() == 9);
    CHECK(env.num_states() == 2);
    CHECK(env.num_actions() == 3);
    CHECK(env.initial_state() == env.state_index("A"));

    const int A = env.state_index("A"), B = env.state_index("B");
    const int a1 = env.action_index("a1"), a2 = env.action_index("a2");
    std::set<double> ra, rb;
    for (int k : env.all_mdps()) {
        CHECK(env.reward(k, A, a1) == 2.0);
        CHECK(env.reward(k, B, a1) == 3.0);
        ra.insert(env.reward(k, A, a2));
        rb.insert(env.reward(k, B, a2));
    }
    CHECK(ra == std::set<double>{1.0, 3.0, 5.0});
    CHECK(rb == std::set<double>{0.0, 2.0, 4.0});
    // Full cross product: all nine (ra, rb) pairs appear exactly once.
    std::set<std::pair<double, double>> pairs;
    for (int k : env.all_mdps())
        pairs.insert({env.reward(k, A, a2), env.reward(k, B, a2)});
    CHECK(pairs.size() == 9);

    CHECK(c.target_states == std::vector<int>{A});
    CHECK(c.horizon == 3);
    CHECK(c.probability == 1.0);
}

TEST_CASE("twin-states: an a2 observation in A keeps exactly three MDPs") {
    auto [env, c] = twin_states(3);
    const int A = env.state_index("A"), a2 = env.action_index("a2");
    for (double r : {1.0, 3.0, 5.0}) {
        auto kept = filter_consistent(env, env.all_mdps(), A, a2, r, A);
        CHECK(kept.size() == 3);
    }
}

TEST_CASE("slippery t-maze mechanics") {
    auto [env, c] = slippery_tmaze();
    CHECK(env.num_mdps() == 3);
    CHECK(c.horizon == 10);
    CHECK(c.probability == doctest::Approx(0.6));
    CHECK(c.target_states == std::vector<int>{env.state_index("c")});

    const int s = env.state_index("s");
    const int right = env.action_index("right");
    for (int k : env.all_mdps()) {
        // Cell s is slippery in every MDP: movement succeeds with .8.
        CHECK(env.transition(k, s, right, env.state_index("h1")) ==
              doctest::Approx(0.8));
        CHECK(env.transition(k, s, right, s) == doctest::Approx(0.2));
    }
    // MDP k has exactly k slippery cells (counting s); cells outside the
    // slippery stretch move deterministically.
    const int h3 = env.state_index("h3");
    const int r_cell = env.state_index("r");
    for (int k : env.all_mdps())
        CHECK(env.transition(k, h3, right, r_cell) == doctest::Approx(1.0));
    // h2 is slippery only in the third MDP.
    const int h2 = env.state_index("h2");
    CHECK(env.transition(1, h2, right, h3) == doctest::Approx(1.0));
    CHECK(env.transition(2, h2, right, h3) == doctest::Approx(1.0));
    CHECK(env.transition(3, h2, right, h3) == doctest::Approx(0.8));

    // Staying in r earns one unit per step; everything else earns zero.
    for (int k : env.all_mdps())
        for (int st = 0; st < env.num_states(); ++st)
            for (int a = 0; a < env.num_actions(); ++a) {
                double expected =
                    (st == r_cell && env.transition(k, st, a, st) == 1.0) ? 1.0 : 0.0;
                CHECK(env.reward(k, st, a) == expected);
            }
}

TEST_CASE("slippery t-maze: commitment feasible in every MDP at p=0.6") {
    auto [env, c] = slippery_tmaze();
    for (int k : env.all_mdps())
        CHECK(oracles::dp_max_reach(env, c, k, env.initial_state(), 0) >=
              c.probability - 1e-12);
}

TEST_CASE("slippery t-maze rejects bad geometry") {
    CHECK_THROWS_AS(slippery_tmaze(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(slippery_tmaze(4, 3, {}), std::invalid_argument);
    CHECK_THROWS_AS(slippery_tmaze(4, 3, {9}), std::invalid_argument);
}

TEST_CASE("observation-4 fixture premises") {
    auto [env, c] = fixture_observation4();
    CHECK(env.num_mdps() == 2);
    CHECK(c.horizon == 2);
    CHECK(c.probability == doctest::Approx(0.8));
    // D unreachable from C at probability .8 in every MDP, yet reachable at
    // .8 from the start (the independent reachability DP certifies both).
    const int C = env.state_index("C");
    for (int k : env.all_mdps()) {
        CHECK(oracles::dp_max_reach(env, c, k, C, 1) < 0.8 - 1e-12);
        CHECK(oracles::dp_max_reach(env, c, k, env.initial_state(), 0) >=
              0.8 - 1e-12);
    }
    // The two reward functions disagree on the better action in C.
    CHECK(env.reward(1, C, 0) > env.reward(1, C, 1));
    CHECK(env.reward(2, C, 0) < env.reward(2, C, 1));
}

TEST_CASE("branch fixture premises") {
    auto [env, c] = fixture_theorem3();
    CHECK(env.num_mdps() == 2);
    CHECK(c.horizon == 3);
    CHECK(c.probability == 0.0);
    CHECK(env.transition(1, 0, 0, env.state_index("1")) == doctest::Approx(0.9));
    CHECK(env.transition(2, 0, 0, env.state_index("2")) == doctest::Approx(0.9));
    const int s3 = env.state_index("3");
    CHECK(env.transition(1, s3, 0, s3) == doctest::Approx(1.0));
    CHECK(env.reward(1, s3, 0) == 1.0);
    CHECK(env.reward(1, s3, 1) == 0.0);
    CHECK(env.reward(2, s3, 1) == 1.0);
    CHECK(env.reward(2, s3, 0) == 0.0);
}

TEST_CASE("environment JSON round trip") {
    for (auto& [env, c] : {twin_states(3), fixture_theorem3(),
                           fixture_observation4(), slippery_tmaze()}) {
        std::string text = serialize_environment(env, c).dump(2);
        auto [env2, c2] = parse_environment(text);
        CHECK(env2.state_names() == env.state_names());
        CHECK(env2.action_names() == env.action_names());
        CHECK(env2.initial_state() == env.initial_state());
        REQUIRE(env2.num_mdps() == env.num_mdps());
        for (int k : env.all_mdps())
            for (int s = 0; s < env.num_states(); ++s)
                for (int a = 0; a < env.num_actions(); ++a) {
                    CHECK(env2.reward(k, s, a) == env.reward(k, s, a));
                    for (int s2 = 0; s2 < env.num_states(); ++s2)
                        CHECK(env2.transition(k, s, a, s2) ==
                              env.transition(k, s, a, s2));
                }
        CHECK(c2.target_states == c.target_states);
        CHECK(c2.horizon == c.horizon);
        CHECK(c2.probability == c.probability);
    }
}

TEST_CASE("environment JSON validation errors name the offender") {
    auto [env, c] = twin_states(2);
    auto j = serialize_environment(env, c);

    // A transition row that does not sum to one is rejected with the (s, a).
    auto bad_sum = j;
    bad_sum["mdps"][0]["transitions"]["A|a0"]["B"] = 0.9;
    CHECK_THROWS_WITH_AS(parse_environment(bad_sum.dump()),
                         doctest::Contains("A"), std::invalid_argument);

    // Unknown action in a transition key.
    auto bad_action = j;
    bad_action["mdps"][0]["transitions"]["A|zap"] = {{"A", 1.0}};
    CHECK_THROWS_WITH_AS(parse_environment(bad_action.dump()),
                         doctest::Contains("zap"), std::invalid_argument);

    // A missing transition row is an error, not an implicit self-loop.
    auto missing = j;
    missing["mdps"][0]["transitions"].erase("B|a1");
    CHECK_THROWS_WITH_AS(parse_environment(missing.dump()),
                         doctest::Contains("B|a1"), std::invalid_argument);

    // Missing top-level key.
    auto no_commit = j;
    no_commit.erase("commitment");
    CHECK_THROWS_AS(parse_environment(no_commit.dump()), std::invalid_argument);
}

TEST_CASE("built-in environments validate as constructed") {
    // Construction itself runs the invariant checks; touch each.
    CHECK(twin_states(1).first.num_mdps() == 9);
    CHECK(fixture_theorem3().first.num_mdps() == 2);
    CHECK(fixture_observation4().first.num_mdps() == 2);
    CHECK(slippery_tmaze().first.num_states() == 4 + 1 + 2 + 1);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "abex/abstraction.hpp"
#include "abex/envs.hpp"
#include "oracles.hpp"

using namespace abex;

namespace {

void check_bundle(const EnvBundle& env) {
    CHECK(env.canonical_aggregation.num_ground() == env.mdp.num_states());
    CHECK(env.labels.size() == env.mdp.num_states());
    for (std::size_t s = 0; s < env.mdp.num_states(); ++s)
        for (std::size_t a = 0; a < env.mdp.num_actions(); ++a) {
            double total = 0.0;
            for (const auto& edge : env.mdp.successors(s, a)) total += edge.prob;
            CHECK(std::abs(total - 1.0) <= 1e-9);
            CHECK(env.mdp.reward(s, a) >= 0.0);
            CHECK(env.mdp.reward(s, a) <= 1.0);
        }
}

}  // namespace

TEST_CASE("over-estimation MDP: default action values") {
    const auto env = make_overestimation();
    check_bundle(env);
    CHECK(env.mdp.num_states() == 12);
    CHECK(env.canonical_aggregation.num_abstract() == 3);
    CHECK(env.canonical_aggregation.class_size(0) == 10);
    for (std::size_t s = 0; s < 10; ++s) {
        CHECK(overestimation_action_value(env, s, overestimation::kLeft) == doctest::Approx(0.001).epsilon(1e-12));
        CHECK(overestimation_action_value(env, s, overestimation::kRight) == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(env.mdp.initial_distribution()[s] == doctest::Approx(0.1));
    }
    CHECK(env.reward_scale == 100.0);
}

TEST_CASE("over-estimation MDP: certain success makes right dominant") {
    const auto env = make_overestimation(9, 1.0, 0.0, 1.0);
    CHECK(overestimation_action_value(env, 3, overestimation::kRight) == doctest::Approx(1.0));
    CHECK(overestimation_action_value(env, 3, overestimation::kLeft) == 0.0);
}

TEST_CASE("over-estimation MDP: a single start state") {
    const auto env = make_overestimation(0);
    check_bundle(env);
    CHECK(env.mdp.num_states() == 3);
    CHECK(env.canonical_aggregation == Aggregation::identity(3));
}

TEST_CASE("over-estimation MDP: every episode lasts one decision") {
    // From a start state any action reaches a terminal or restarts; terminals
    // always return to the start distribution.
    const auto env = make_overestimation(4, 100.0, 0.001, 0.3);
    const std::size_t starts = 5;
    for (std::size_t s = 0; s < starts; ++s)
        for (std::size_t a = 0; a < 2; ++a) CHECK(env.mdp.reward(s, a) == 0.0);
    for (std::size_t terminal : {starts, starts + 1})
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t s = 0; s < starts; ++s)
                CHECK(env.mdp.transition(terminal, a, s) == doctest::Approx(env.mdp.initial_distribution()[s]));
    CHECK_THROWS_AS(make_overestimation(9, 100.0, 0.001, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_overestimation(9, 100.0, 0.001, 1.5), std::invalid_argument);
}

TEST_CASE("nine rooms: sizes and aggregation") {
    const auto env = make_nine_rooms(5);
    check_bundle(env);
    // Independent count: 3 x 3 rooms of 5 x 5 cells.
    std::size_t cells = 0;
    for (int room = 0; room < 9; ++room)
        for (int i = 0; i < 25; ++i) ++cells;
    CHECK(env.mdp.num_states() == cells);
    CHECK(env.mdp.num_actions() == 4);
    CHECK(env.canonical_aggregation.num_abstract() == 9);
    for (std::size_t c = 0; c < 9; ++c) CHECK(env.canonical_aggregation.members(c).size() == 25);
    CHECK(env.mdp.initial_distribution()[0] == 1.0);
    CHECK_THROWS_AS(make_nine_rooms(1), std::invalid_argument);
    CHECK_THROWS_AS(make_nine_rooms(2), std::invalid_argument);
}

TEST_CASE("nine rooms: goal block sits in the top-right corner") {
    const NineRoomsLayout layout{5};
    const auto goals = layout.goal_cells();
    CHECK(goals.size() == 4);
    std::set<std::pair<std::size_t, std::size_t>> coords;
    for (auto g : goals) {
        coords.insert({g % 15, g / 15});
        CHECK(layout.room_of(g) == 8);
    }
    CHECK(coords == std::set<std::pair<std::size_t, std::size_t>>{{12, 12}, {13, 12}, {12, 13}, {13, 13}});
    const auto env = make_nine_rooms(5);
    for (auto g : goals)
        for (std::size_t a = 0; a < 4; ++a) {
            CHECK(env.mdp.reward(g, a) == 1.0);
            CHECK(env.mdp.transition(g, a, layout.start_cell()) == 1.0);
        }
}

TEST_CASE("nine rooms: walls and the boundary block movement") {
    const NineRoomsLayout layout{5};
    // Outer boundary.
    CHECK(layout.move(layout.cell(0, 0), ninerooms::kLeft) == layout.cell(0, 0));
    CHECK(layout.move(layout.cell(0, 0), ninerooms::kDown) == layout.cell(0, 0));
    CHECK(layout.move(layout.cell(14, 14), ninerooms::kUp) == layout.cell(14, 14));
    // Wall between room columns 0 and 1 away from the doorway (door at y % 5 == 2).
    CHECK(layout.move(layout.cell(4, 0), ninerooms::kRight) == layout.cell(4, 0));
    CHECK(layout.move(layout.cell(4, 2), ninerooms::kRight) == layout.cell(5, 2));
    // Wall between room rows 0 and 1 away from the doorway.
    CHECK(layout.move(layout.cell(0, 4), ninerooms::kUp) == layout.cell(0, 4));
    CHECK(layout.move(layout.cell(2, 4), ninerooms::kUp) == layout.cell(2, 5));
    // Open floor.
    CHECK(layout.move(layout.cell(1, 1), ninerooms::kRight) == layout.cell(2, 1));
    // Every blocked move in the MDP is a self-loop with zero reward.
    const auto env = make_nine_rooms(5);
    for (std::size_t s = 0; s < env.mdp.num_states(); ++s)
        for (std::size_t a = 0; a < 4; ++a) CHECK(env.mdp.successors(s, a).size() == 1);
}

TEST_CASE("nine rooms: the goal is reachable and the MDP communicates") {
    const auto env = make_nine_rooms(5);
    const NineRoomsLayout layout{5};
    const auto length = oracle::shortest_path_length(env.mdp, layout.start_cell(), layout.goal_cells());
    CHECK(length > 0);
    CHECK(length < std::numeric_limits<std::size_t>::max());
    // Manhattan distance 24 to (12, 12); doorways lie on the way.
    CHECK(length == 24);
    CHECK(oracle::communicating(env.mdp));
}

TEST_CASE("counterexample: structure and values") {
    const double eta = 0.1, gamma = 0.9;
    const auto env = make_counterexample(eta, gamma);
    check_bundle(env);
    CHECK(model_similarity_eta(env.mdp, env.canonical_aggregation) == doctest::Approx(eta).epsilon(1e-12));
    const auto v_a2 = oracle::policy_values_linear(env.mdp, {1, 1, 0});
    const auto v_a1 = oracle::policy_values_linear(env.mdp, {0, 0, 0});
    CHECK(v_a2[0] == doctest::Approx(eta / (1.0 - gamma)).epsilon(1e-12));
    CHECK(v_a1[0] == 0.0);

    const auto abstract = build_abstract_mdp(env.mdp, env.canonical_aggregation);
    const auto abstract_pi1 = oracle::policy_values_linear(abstract, {0, 0});
    const auto abstract_pi2 = oracle::policy_values_linear(abstract, {1, 1});
    CHECK(abstract_pi1[0] == doctest::Approx(3.448276).epsilon(1e-6));
    CHECK(abstract_pi2[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(abstract_pi1[0] > abstract_pi2[0]);
}

TEST_CASE("counterexample: both actions tie near eta = 0") {
    const auto env = make_counterexample(1e-9, 0.9);
    const auto v_a2 = oracle::policy_values_linear(env.mdp, {1, 1, 0});
    const auto v_a1 = oracle::policy_values_linear(env.mdp, {0, 0, 0});
    CHECK(std::abs(v_a2[0] - v_a1[0]) <= 1e-7);
    CHECK(model_similarity_eta(env.mdp, env.canonical_aggregation) <= 1e-9);
    CHECK_THROWS_AS(make_counterexample(0.0, 0.9), std::invalid_argument);
}

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "abex/abstraction.hpp"
#include "abex/mdp.hpp"

namespace abex {

/// An environment together with the aggregation its experiments use.
struct EnvBundle {
    TabularMdp mdp;
    Aggregation canonical_aggregation;
    std::vector<std::string> labels;
    /// Multiply MDP rewards by this to recover the domain's reward units.
    double reward_scale = 1.0;
};

namespace overestimation {
inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;
}  // namespace overestimation

/**
 * Start states s_0..s_t (uniform initial distribution) and terminals T_0, T_1.
 * left moves to T_0; right moves to T_1 with probability p, otherwise the
 * episode ends without reward and restarts. Each terminal pays its reward
 * (eps_reward at T_0, big_reward at T_1) on the following step and returns
 * to the initial distribution. Rewards are divided by max(big_reward,
 * eps_reward) to lie in [0, 1]; reward_scale undoes it.
 *
 * States are ordered s_0..s_t, T_0, T_1; the canonical aggregation merges
 * the start states and keeps each terminal alone.
 */
EnvBundle make_overestimation(std::size_t t = 9, double big_reward = 100.0, double eps_reward = 0.001,
                              double p = 1e-4, double gamma = 0.9);

/// Expected reward, in domain units, that one episode started in
/// `start_state` collects when it opens with `action`.
double overestimation_action_value(const EnvBundle& env, std::size_t start_state, std::size_t action);

namespace ninerooms {
inline constexpr std::size_t kUp = 0;
inline constexpr std::size_t kDown = 1;
inline constexpr std::size_t kLeft = 2;
inline constexpr std::size_t kRight = 3;
}  // namespace ninerooms

/// Layout helpers for the nine-room grid. Cells are indexed y * width + x
/// with y = 0 the bottom row.
struct NineRoomsLayout {
    std::size_t room_size;
    std::size_t width() const { return 3 * room_size; }
    std::size_t num_cells() const { return width() * width(); }
    std::size_t cell(std::size_t x, std::size_t y) const { return y * width() + x; }
    std::size_t room_of(std::size_t cell) const;
    std::size_t start_cell() const { return 0; }
    std::vector<std::size_t> goal_cells() const;
    /// Successor of a deterministic move; walls and the outer boundary block.
    std::size_t move(std::size_t cell, std::size_t action) const;
};

/**
 * 3x3 rooms of room_size x room_size cells separated by walls with one
 * doorway at the midpoint of every shared wall. Four deterministic moves.
 * The agent starts in the bottom-left cell; the goal is a 2x2 block in
 * the top-right corner of the top-right room, one cell in from the outer
 * walls. Any action taken in a goal cell pays 1 and restarts at the start
 * cell. Canonical aggregation: room membership. room_size must be >= 3.
 */
EnvBundle make_nine_rooms(std::size_t room_size = 5, double gamma = 0.95);

/**
 * Three states, two actions (a1 = 0, a2 = 1).
 *   a1: s0 stays (R = 0); s1 stays w.p. 1 - eta, else moves to s2 (R = eta).
 *   a2: s0 stays (R = eta); s1 stays (R = 0).
 *   s2 is absorbing with R = 1 under both actions.
 * Aggregation {s0, s1} -> 0, {s2} -> 1 with uniform weights. The initial
 * distribution is concentrated on s0.
 */
EnvBundle make_counterexample(double eta, double gamma);

}  // namespace abex

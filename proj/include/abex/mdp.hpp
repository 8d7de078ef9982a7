#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "abex/random.hpp"

namespace abex {

/// One outgoing edge of a transition row.
struct Transition {
    std::size_t next;
    double prob;
};

/**
 * Finite MDP with a stochastic transition row per (s, a), a reward per
 * (s, a), a discount in [0, 1) and an initial state distribution.
 *
 * Rows are stored sparsely (zero entries dropped). Construction validates
 * every invariant and throws std::invalid_argument on violation; the
 * object is immutable afterwards.
 */
class TabularMdp {
public:
    /// Dense constructor: `transitions` is indexed [(s * A + a) * S + s'],
    /// `rewards` is indexed [s * A + a].
    TabularMdp(std::size_t num_states, std::size_t num_actions,
               std::span<const double> transitions, std::vector<double> rewards,
               double discount, std::vector<double> initial_distribution);

    /// Sparse constructor: one row per (s, a) in s-major order. Duplicate
    /// successors within a row are merged.
    static TabularMdp from_rows(std::size_t num_states, std::size_t num_actions,
                                const std::vector<std::vector<Transition>>& rows,
                                std::vector<double> rewards, double discount,
                                std::vector<double> initial_distribution);

    /// Compressed-row constructor: row (s, a) is entries[offsets[s*A+a] .. offsets[s*A+a+1]).
    /// Entries within a row must have distinct successors.
    static TabularMdp from_sparse(std::size_t num_states, std::size_t num_actions,
                                  std::vector<std::size_t> offsets, std::vector<Transition> entries,
                                  std::vector<double> rewards, double discount,
                                  std::vector<double> initial_distribution);

    /// Same dynamics with rewards R + bonus. The result is not restricted to
    /// unit rewards, which is what the bonus-augmented Bellman equation needs.
    static TabularMdp with_bonus(const TabularMdp& mdp, std::span<const double> bonus);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_pairs() const { return num_states_ * num_actions_; }
    double discount() const { return discount_; }

    /// 1 / (1 - gamma): the largest value reachable with rewards in [0, 1].
    double qmax() const { return 1.0 / (1.0 - discount_); }

    std::span<const Transition> successors(std::size_t s, std::size_t a) const;
    double transition(std::size_t s, std::size_t a, std::size_t next) const;
    double reward(std::size_t s, std::size_t a) const { return rewards_[s * num_actions_ + a]; }
    std::span<const double> rewards() const { return rewards_; }
    std::span<const double> initial_distribution() const { return initial_; }

    /// True when every reward lies in [0, 1] (always true unless built by with_bonus).
    bool unit_rewards() const { return unit_rewards_; }

    /// Dense copy of the transition tensor, [(s * A + a) * S + s'].
    std::vector<double> dense_transitions() const;

private:
    TabularMdp() = default;
    void validate() const;

    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> entries_;
    std::vector<double> rewards_;
    double discount_ = 0.0;
    std::vector<double> initial_;
    bool unit_rewards_ = true;
};

/// Action values with the diagnostics of the solve that produced them.
struct QTable {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> values;
    /// Sup-norm change of the last sweep. The Bellman residual of `values`
    /// is at most discount * residual.
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    double operator()(std::size_t s, std::size_t a) const { return values[s * num_actions + a]; }
    std::span<const double> row(std::size_t s) const {
        return std::span<const double>(values).subspan(s * num_actions, num_actions);
    }
    /// V(s) = max_a Q(s, a).
    std::vector<double> state_values() const;
};

/// Deterministic (one action per state) or stochastic (a distribution per state).
class Policy {
public:
    static Policy deterministic(std::vector<std::size_t> actions, std::size_t num_actions);
    static Policy stochastic(std::size_t num_states, std::size_t num_actions,
                             std::vector<double> probabilities);
    static Policy constant(std::size_t num_states, std::size_t num_actions, std::size_t action);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    bool is_deterministic() const { return probs_.empty(); }

    /// Throws std::logic_error for stochastic policies.
    std::size_t action(std::size_t s) const;
    double probability(std::size_t s, std::size_t a) const;
    std::span<const std::size_t> actions() const { return actions_; }

    bool operator==(const Policy&) const = default;

private:
    Policy() = default;
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::size_t> actions_;
    std::vector<double> probs_;
};

struct SolveOptions {
    double tol = 1e-8;
    std::size_t max_iters = 100000;
    /// Starting point; ignored when its shape does not match the MDP.
    const QTable* warm_start = nullptr;
    /// Optional per-(s, a) fixed values. NaN entries are free; finite
    /// entries hold Q(s, a) at that value throughout the solve.
    std::span<const double> pinned = {};
};

/**
 * Solves Q(s,a) = R(s,a) + bonus(s,a) + gamma * E[max_a' Q(s',a')] by
 * synchronous value iteration. An empty bonus means zero.
 *
 * Running out of iterations is not an error: the result carries
 * converged = false and the last residual.
 */
QTable solve_value_iteration(const TabularMdp& mdp, std::span<const double> bonus = {},
                             const SolveOptions& options = {});

/// argmax per state, ties to the lowest action index.
Policy greedy_policy(const QTable& q);
std::size_t greedy_action(std::span<const double> q_row);

/// V^pi by fixed-point iteration until successive iterates differ by at most tol.
std::vector<double> evaluate_policy(const TabularMdp& mdp, const Policy& policy,
                                    double tol = 1e-10, std::size_t max_iters = 10000000);

struct StepResult {
    std::size_t next_state;
    double reward;
};

StepResult step(const TabularMdp& mdp, std::size_t state, std::size_t action, Rng& rng);
std::size_t sample_initial_state(const TabularMdp& mdp, Rng& rng);

}  // namespace abex

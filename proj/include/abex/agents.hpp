#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abex/abstraction.hpp"
#include "abex/density.hpp"
#include "abex/mdp.hpp"
#include "abex/random.hpp"

namespace abex {

/// (1 / (1 - gamma)) * sqrt(ln(2 |S| |A| m / delta) / 2).
double mbie_eb_beta(std::size_t num_states, std::size_t num_actions, std::size_t m, double delta, double gamma);

/// beta * b * sqrt(d): the bonus scale that keeps the pseudo-count agent from under-exploring.
double corrected_beta(double beta, double b, double d);

/// b^2 d / (a^2 c).
double over_exploration_factor(double a, double b, double c, double d);

/// 1 - delta/2 - K (delta / (2K))^p with K = |S| |A| m.
double under_exploration_confidence(double p, double delta, std::size_t num_states, std::size_t num_actions,
                                    std::size_t m);

enum class BonusSource { empirical_count, abstract_count, pseudo_count_hat, pseudo_count_tilde };
enum class DensityKind { empirical, uniform_aggregation };

std::string to_string(BonusSource source);
std::string to_string(DensityKind kind);
BonusSource parse_bonus_source(const std::string& name);
DensityKind parse_density_kind(const std::string& name);

struct AgentConfig {
    double beta = 0.05;
    double epsilon_greedy = 0.0;
    BonusSource bonus_source = BonusSource::empirical_count;
    /// Density model behind the pseudo-count sources.
    DensityKind density = DensityKind::empirical;
    /// Required by abstract_count and by the uniform_aggregation density.
    std::optional<Aggregation> aggregation;
    double planning_tol = 1e-8;
    std::size_t replan_every = 1;
    std::size_t horizon = 1000;
    /// Only used when computing beta from mbie_eb_beta.
    std::size_t m = 1;
    /// Store the greedy policy every this many steps (0 = never).
    std::size_t snapshot_every = 0;

    /// Throws std::invalid_argument when the configuration cannot run on an
    /// environment with `num_states` states.
    void validate(std::size_t num_states) const;
};

/**
 * Action-value solver that keeps its solution between calls. Rows are
 * replaced one (s, a) at a time; solve() then restores a Bellman residual
 * of at most `tol` everywhere by prioritized sweeping, touching only the
 * states whose backups changed.
 *
 * A pinned pair keeps a fixed value regardless of its row.
 */
class IncrementalPlanner {
public:
    IncrementalPlanner(std::size_t num_states, std::size_t num_actions, double discount);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    double discount() const { return discount_; }

    /// Row of (s, a): successors must sum to one; `reward` already includes any bonus.
    void set_row(std::size_t s, std::size_t a, double reward, std::vector<Transition> successors);
    void set_reward(std::size_t s, std::size_t a, double reward);
    /// NaN unpins.
    void set_pinned(std::size_t s, std::size_t a, double value);

    double reward(std::size_t s, std::size_t a) const { return rewards_[s * num_actions_ + a]; }
    double pinned(std::size_t s, std::size_t a) const { return pinned_[s * num_actions_ + a]; }
    std::span<const Transition> successors(std::size_t s, std::size_t a) const {
        return rows_[s * num_actions_ + a];
    }

    /// Returns false when max_backups ran out before the residual dropped below tol.
    bool solve(double tol, std::size_t max_backups = 100000000);

    double q(std::size_t s, std::size_t a) const;
    std::span<const double> state_values() const { return values_; }
    std::size_t greedy_action(std::size_t s) const;
    /// Number of state backups performed by the last solve().
    std::size_t last_backups() const { return last_backups_; }

    /// Snapshot of the current model: transitions as a TabularMdp (rewards
    /// not restricted to [0, 1]) and the pinned values, for checking.
    TabularMdp to_mdp() const;
    std::vector<double> pinned_values() const { return pinned_; }

private:
    double backup_pair(std::size_t sa) const;
    double backup_state(std::size_t s) const;
    void mark(std::size_t s);

    std::size_t num_states_;
    std::size_t num_actions_;
    double discount_;
    std::vector<double> rewards_;
    std::vector<double> pinned_;
    std::vector<std::vector<Transition>> rows_;
    std::vector<std::vector<std::pair<std::size_t, double>>> predecessors_;
    std::vector<double> values_;
    std::vector<char> dirty_flag_;
    std::vector<std::size_t> dirty_;
    std::size_t last_backups_ = 0;
};

/**
 * MBIE-EB on the empirical model with bonus beta / sqrt(count), where the
 * count comes from the configured source:
 *   empirical_count    N(s, a), planning on the ground model;
 *   abstract_count     N^A(phi(s), a), planning on the abstract empirical model;
 *   pseudo_count_hat   N-hat from the density model, ground model;
 *   pseudo_count_tilde the class-aware corrected count, ground model.
 * Pairs with a zero count are pinned at Qmax + beta; their empirical row is a
 * zero-reward self-loop until visited.
 */
class MbieEbAgent {
public:
    MbieEbAgent(std::size_t num_states, std::size_t num_actions, double discount, AgentConfig config);

    const AgentConfig& config() const { return config_; }

    /// Solves the planning model if due at this step and refreshes the greedy policy.
    void plan(std::size_t step);
    /// Greedy action per ground state from the last plan.
    std::span<const std::size_t> greedy_actions() const { return greedy_; }
    /// Count and bonus the planner currently uses for ground (s, a).
    double count(std::size_t s, std::size_t a) const;
    double bonus(std::size_t s, std::size_t a) const;
    void observe(std::size_t s, std::size_t a, double reward, std::size_t next);

    const VisitStats& stats() const { return stats_; }
    const IncrementalPlanner& planner() const { return planner_; }

private:
    bool abstract_planning() const { return config_.bonus_source == BonusSource::abstract_count; }
    std::size_t model_state(std::size_t s) const { return abstract_planning() ? config_.aggregation->phi(s) : s; }
    void refresh_row(std::size_t ms, std::size_t a);
    void refresh_pseudo_counts();
    void apply_count(std::size_t ms, std::size_t a, double count);

    std::size_t num_states_;
    std::size_t num_actions_;
    AgentConfig config_;
    double optimistic_value_;
    VisitStats stats_;
    std::optional<VisitStats> abstract_stats_;
    std::unique_ptr<DensityModel> density_;
    IncrementalPlanner planner_;
    std::vector<double> counts_;  // per planning-model pair
    std::vector<std::size_t> greedy_;
};

struct StepRecord {
    std::size_t state = 0;
    std::size_t action = 0;
    double reward = 0.0;
    /// Count behind the bonus (0 for a pair never counted).
    double count = 0.0;
    double bonus = 0.0;
    double cumulative_reward = 0.0;
    bool explored = false;  // action came from the epsilon branch
};

struct PolicySnapshot {
    std::size_t step = 0;
    std::vector<std::size_t> actions;
};

struct ExperimentTrace {
    std::vector<StepRecord> steps;
    /// FNV-1a hash of the greedy policy in force at each step.
    std::vector<std::uint64_t> policy_hashes;
    std::vector<PolicySnapshot> snapshots;
};

/// Called once per step with the greedy policy the agent acts on.
using StepObserver = std::function<void(std::size_t step, std::span<const std::size_t> greedy)>;

/**
 * Runs the agent for config.horizon steps. Each step: replan (every
 * replan_every steps), act greedily (or uniformly at random with
 * probability epsilon_greedy), step the environment, update statistics.
 * The trace depends only on (env, config, rng state).
 */
ExperimentTrace run_mbie_eb(const TabularMdp& env, const AgentConfig& config, Rng& rng,
                            const StepObserver& observer = {});

std::uint64_t policy_hash(std::span<const std::size_t> actions);

}  // namespace abex

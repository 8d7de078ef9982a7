#include "abex/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <deque>
#include <stdexcept>
#include <utility>

#include "abex/pseudocount.hpp"

namespace abex {

// --- beta calculus ------------------------------------------------------------

double mbie_eb_beta(std::size_t num_states, std::size_t num_actions, std::size_t m, double delta, double gamma) {
    if (num_states == 0 || num_actions == 0 || m == 0)
        throw std::invalid_argument("mbie_eb_beta: state, action and m counts must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("mbie_eb_beta: delta must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("mbie_eb_beta: gamma must lie in [0, 1)");
    const double k = 2.0 * static_cast<double>(num_states) * static_cast<double>(num_actions) *
                     static_cast<double>(m);
    return std::sqrt(std::log(k / delta) / 2.0) / (1.0 - gamma);
}

double corrected_beta(double beta, double b, double d) {
    if (!(b > 0.0) || !(d > 0.0)) throw std::invalid_argument("corrected_beta: b and d must be positive");
    return beta * b * std::sqrt(d);
}

double over_exploration_factor(double a, double b, double c, double d) {
    if (!(a > 0.0) || !(c > 0.0)) throw std::invalid_argument("over_exploration_factor: a and c must be positive");
    return b * b * d / (a * a * c);
}

double under_exploration_confidence(double p, double delta, std::size_t num_states, std::size_t num_actions,
                                    std::size_t m) {
    if (!(p > 0.0)) throw std::invalid_argument("under_exploration_confidence: p must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("under_exploration_confidence: delta must lie in (0, 1)");
    if (num_states == 0 || num_actions == 0 || m == 0)
        throw std::invalid_argument("under_exploration_confidence: counts must be >= 1");
    const double k = static_cast<double>(num_states) * static_cast<double>(num_actions) * static_cast<double>(m);
    // K (delta/2K)^p written as (delta/2) (delta/2K)^(p-1), which is exactly delta/2 at p = 1.
    const double penalty = (delta / 2.0) * std::pow(delta / (2.0 * k), p - 1.0);
    // Summing the two halves first keeps p = 1 exactly equal to 1 - delta.
    return 1.0 - (delta / 2.0 + penalty);
}

// --- configuration ------------------------------------------------------------

std::string to_string(BonusSource source) {
    switch (source) {
        case BonusSource::empirical_count: return "empirical-count";
        case BonusSource::abstract_count: return "abstract-count";
        case BonusSource::pseudo_count_hat: return "pseudo-count-hat";
        case BonusSource::pseudo_count_tilde: return "pseudo-count-tilde";
    }
    return "unknown";
}

std::string to_string(DensityKind kind) {
    switch (kind) {
        case DensityKind::empirical: return "empirical";
        case DensityKind::uniform_aggregation: return "uniform-aggregation";
    }
    return "unknown";
}

BonusSource parse_bonus_source(const std::string& name) {
    for (auto source : {BonusSource::empirical_count, BonusSource::abstract_count, BonusSource::pseudo_count_hat,
                        BonusSource::pseudo_count_tilde})
        if (to_string(source) == name) return source;
    throw std::invalid_argument("unknown bonus source '" + name + "'");
}

DensityKind parse_density_kind(const std::string& name) {
    for (auto kind : {DensityKind::empirical, DensityKind::uniform_aggregation})
        if (to_string(kind) == name) return kind;
    throw std::invalid_argument("unknown density model '" + name + "'");
}

void AgentConfig::validate(std::size_t num_states) const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("AgentConfig: beta must be finite and >= 0");
    if (!(epsilon_greedy >= 0.0 && epsilon_greedy <= 1.0))
        throw std::invalid_argument("AgentConfig: epsilon_greedy must lie in [0, 1]");
    if (!(planning_tol > 0.0)) throw std::invalid_argument("AgentConfig: planning_tol must be positive");
    if (replan_every == 0) throw std::invalid_argument("AgentConfig: replan_every must be >= 1");
    if (horizon == 0) throw std::invalid_argument("AgentConfig: horizon must be >= 1");
    if (m == 0) throw std::invalid_argument("AgentConfig: m must be >= 1");
    const bool pseudo = bonus_source == BonusSource::pseudo_count_hat || bonus_source == BonusSource::pseudo_count_tilde;
    if (bonus_source == BonusSource::abstract_count && !aggregation)
        throw std::invalid_argument("AgentConfig: abstract-count bonus requires an aggregation");
    if (pseudo && density == DensityKind::uniform_aggregation && !aggregation)
        throw std::invalid_argument("AgentConfig: the uniform-aggregation density requires an aggregation");
    if (aggregation && aggregation->num_ground() != num_states)
        throw std::invalid_argument("AgentConfig: aggregation covers " + std::to_string(aggregation->num_ground()) +
                                    " states, environment has " + std::to_string(num_states));
}

// --- IncrementalPlanner -------------------------------------------------------

IncrementalPlanner::IncrementalPlanner(std::size_t num_states, std::size_t num_actions, double discount)
    : num_states_(num_states),
      num_actions_(num_actions),
      discount_(discount),
      rewards_(num_states * num_actions, 0.0),
      pinned_(num_states * num_actions, std::numeric_limits<double>::quiet_NaN()),
      rows_(num_states * num_actions),
      predecessors_(num_states),
      values_(num_states, 0.0),
      dirty_flag_(num_states, 0) {
    if (num_states == 0 || num_actions == 0) throw std::invalid_argument("IncrementalPlanner: empty model");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("IncrementalPlanner: discount must lie in [0, 1)");
    for (std::size_t s = 0; s < num_states; ++s) {
        for (std::size_t a = 0; a < num_actions; ++a) rows_[s * num_actions + a] = {{s, 1.0}};
        predecessors_[s].push_back({s, 1.0});
        mark(s);
    }
}

void IncrementalPlanner::mark(std::size_t s) {
    if (!dirty_flag_[s]) {
        dirty_flag_[s] = 1;
        dirty_.push_back(s);
    }
}

void IncrementalPlanner::set_row(std::size_t s, std::size_t a, double reward, std::vector<Transition> successors) {
    if (s >= num_states_ || a >= num_actions_) throw std::out_of_range("IncrementalPlanner::set_row: index");
    if (!std::isfinite(reward)) throw std::invalid_argument("IncrementalPlanner::set_row: non-finite reward");
    double total = 0.0;
    for (const auto& t : successors) {
        if (t.next >= num_states_) throw std::out_of_range("IncrementalPlanner::set_row: successor");
        if (!(t.prob >= 0.0)) throw std::invalid_argument("IncrementalPlanner::set_row: negative probability");
        total += t.prob;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("IncrementalPlanner::set_row: row does not sum to 1");
    for (const auto& t : successors) {
        auto& preds = predecessors_[t.next];
        auto it = std::find_if(preds.begin(), preds.end(), [s](const auto& e) { return e.first == s; });
        if (it == preds.end())
            preds.push_back({s, t.prob});
        else
            it->second = std::max(it->second, t.prob);
    }
    rows_[s * num_actions_ + a] = std::move(successors);
    rewards_[s * num_actions_ + a] = reward;
    mark(s);
}

void IncrementalPlanner::set_reward(std::size_t s, std::size_t a, double reward) {
    if (s >= num_states_ || a >= num_actions_) throw std::out_of_range("IncrementalPlanner::set_reward: index");
    if (!std::isfinite(reward)) throw std::invalid_argument("IncrementalPlanner::set_reward: non-finite reward");
    double& slot = rewards_[s * num_actions_ + a];
    if (slot != reward) {
        slot = reward;
        mark(s);
    }
}

void IncrementalPlanner::set_pinned(std::size_t s, std::size_t a, double value) {
    if (s >= num_states_ || a >= num_actions_) throw std::out_of_range("IncrementalPlanner::set_pinned: index");
    double& slot = pinned_[s * num_actions_ + a];
    const bool same = (std::isnan(slot) && std::isnan(value)) || slot == value;
    if (!same) {
        slot = value;
        mark(s);
    }
}

double IncrementalPlanner::backup_pair(std::size_t sa) const {
    if (!std::isnan(pinned_[sa])) return pinned_[sa];
    double expected = 0.0;
    for (const auto& t : rows_[sa]) expected += t.prob * values_[t.next];
    return rewards_[sa] + discount_ * expected;
}

double IncrementalPlanner::backup_state(std::size_t s) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < num_actions_; ++a) best = std::max(best, backup_pair(s * num_actions_ + a));
    return best;
}

double IncrementalPlanner::q(std::size_t s, std::size_t a) const { return backup_pair(s * num_actions_ + a); }

std::size_t IncrementalPlanner::greedy_action(std::size_t s) const {
    std::size_t best = 0;
    double best_value = q(s, 0);
    for (std::size_t a = 1; a < num_actions_; ++a) {
        const double v = q(s, a);
        if (v > best_value) {
            best_value = v;
            best = a;
        }
    }
    return best;
}

bool IncrementalPlanner::solve(double tol, std::size_t max_backups) {
    if (!(tol > 0.0)) throw std::invalid_argument("IncrementalPlanner::solve: tol must be positive");
    // bound[s] is an upper bound on |backup(s) - V(s)|. A change of V(s) by
    // delta raises the bound of each predecessor p by gamma * w(p, s) * |delta|,
    // where w(p, s) bounds the probability of reaching s from p in one step.
    // States whose bound exceeds tol wait in a FIFO work list.
    std::vector<double> bound(num_states_, 0.0);
    std::vector<char> queued(num_states_, 0);
    std::deque<std::size_t> work;

    for (std::size_t s : dirty_) {
        dirty_flag_[s] = 0;
        bound[s] = std::abs(backup_state(s) - values_[s]);
        if (bound[s] > tol) {
            queued[s] = 1;
            work.push_back(s);
        }
    }
    dirty_.clear();

    last_backups_ = 0;
    while (!work.empty()) {
        if (last_backups_ == max_backups) {
            // Leave the unfinished states dirty so a later solve resumes them.
            for (std::size_t s : work) mark(s);
            return false;
        }
        const std::size_t s = work.front();
        work.pop_front();
        queued[s] = 0;
        const double updated = backup_state(s);
        const double delta = std::abs(updated - values_[s]);
        values_[s] = updated;
        bound[s] = 0.0;
        ++last_backups_;
        if (delta == 0.0) continue;
        for (const auto& [p, weight] : predecessors_[s]) {
            bound[p] += discount_ * weight * delta;
            if (bound[p] > tol && !queued[p]) {
                queued[p] = 1;
                work.push_back(p);
            }
        }
    }
    return true;
}

TabularMdp IncrementalPlanner::to_mdp() const {
    std::vector<double> initial(num_states_, 1.0 / static_cast<double>(num_states_));
    auto base = TabularMdp::from_rows(num_states_, num_actions_, rows_, std::vector<double>(rewards_.size(), 0.0),
                                      discount_, std::move(initial));
    return TabularMdp::with_bonus(base, rewards_);
}

// --- MbieEbAgent --------------------------------------------------------------

MbieEbAgent::MbieEbAgent(std::size_t num_states, std::size_t num_actions, double discount, AgentConfig config)
    : num_states_(num_states),
      num_actions_(num_actions),
      config_(std::move(config)),
      optimistic_value_(1.0 / (1.0 - discount) + config_.beta),
      stats_(num_states, num_actions),
      planner_(config_.bonus_source == BonusSource::abstract_count && config_.aggregation
                   ? config_.aggregation->num_abstract()
                   : num_states,
               num_actions, discount),
      greedy_(num_states, 0) {
    config_.validate(num_states);
    if (abstract_planning()) abstract_stats_.emplace(config_.aggregation->num_abstract(), num_actions);
    if (config_.bonus_source == BonusSource::pseudo_count_hat ||
        config_.bonus_source == BonusSource::pseudo_count_tilde) {
        if (config_.density == DensityKind::empirical)
            density_ = std::make_unique<EmpiricalDensity>(num_states, num_actions);
        else
            density_ = std::make_unique<UniformAggregationDensity>(num_actions, *config_.aggregation);
    }
    counts_.assign(planner_.num_states() * num_actions, 0.0);
    for (std::size_t ms = 0; ms < planner_.num_states(); ++ms)
        for (std::size_t a = 0; a < num_actions; ++a) planner_.set_pinned(ms, a, optimistic_value_);
}

double MbieEbAgent::count(std::size_t s, std::size_t a) const { return counts_[model_state(s) * num_actions_ + a]; }

double MbieEbAgent::bonus(std::size_t s, std::size_t a) const {
    return config_.beta / std::sqrt(std::max(count(s, a), 1.0));
}

void MbieEbAgent::refresh_row(std::size_t ms, std::size_t a) {
    const VisitStats& source = abstract_planning() ? *abstract_stats_ : stats_;
    const std::uint64_t n = source.count(ms, a);
    std::vector<Transition> row;
    double mean_reward = 0.0;
    if (n == 0) {
        row.push_back({ms, 1.0});
    } else {
        const double total = static_cast<double>(n);
        for (const auto& [next, k] : source.successors(ms, a)) row.push_back({next, static_cast<double>(k) / total});
        mean_reward = std::clamp(source.reward_sum(ms, a) / total, 0.0, 1.0);
    }
    const double b = config_.beta / std::sqrt(std::max(counts_[ms * num_actions_ + a], 1.0));
    planner_.set_row(ms, a, mean_reward + b, std::move(row));
}

void MbieEbAgent::apply_count(std::size_t ms, std::size_t a, double count) {
    const std::size_t idx = ms * num_actions_ + a;
    if (count == counts_[idx]) return;
    counts_[idx] = count;
    const VisitStats& source = abstract_planning() ? *abstract_stats_ : stats_;
    const std::uint64_t n = source.count(ms, a);
    const double mean_reward = n == 0 ? 0.0 : std::clamp(source.reward_sum(ms, a) / static_cast<double>(n), 0.0, 1.0);
    planner_.set_reward(ms, a, mean_reward + config_.beta / std::sqrt(std::max(count, 1.0)));
    planner_.set_pinned(ms, a, count == 0.0 ? optimistic_value_ : std::numeric_limits<double>::quiet_NaN());
}

void MbieEbAgent::refresh_pseudo_counts() {
    const bool tilde = config_.bonus_source == BonusSource::pseudo_count_tilde;
    const bool by_class = config_.density == DensityKind::uniform_aggregation;
    // Under the uniform-aggregation model every member of a class shares one probe.
    std::vector<double> class_cache;
    std::vector<char> cached;
    if (by_class) {
        class_cache.assign(config_.aggregation->num_abstract() * num_actions_, 0.0);
        cached.assign(class_cache.size(), 0);
    }
    for (std::size_t s = 0; s < num_states_; ++s) {
        for (std::size_t a = 0; a < num_actions_; ++a) {
            double value = 0.0;
            std::size_t key = 0;
            if (by_class) {
                key = config_.aggregation->phi(s) * num_actions_ + a;
                if (cached[key]) {
                    apply_count(s, a, class_cache[key]);
                    continue;
                }
            }
            const DensityProbe probe = density_->probe(s, a);
            if (probe.rho > 0.0) value = tilde ? corrected_pseudo_count(probe).value : pseudo_count(probe).value;
            if (by_class) {
                class_cache[key] = value;
                cached[key] = 1;
            }
            apply_count(s, a, value);
        }
    }
}

void MbieEbAgent::observe(std::size_t s, std::size_t a, double reward, std::size_t next) {
    if (s >= num_states_ || a >= num_actions_ || next >= num_states_)
        throw std::out_of_range("MbieEbAgent::observe: index out of range");
    stats_.record(s, a, next, reward);
    const std::size_t ms = model_state(s);
    if (abstract_planning()) abstract_stats_->record(ms, a, model_state(next), reward);

    switch (config_.bonus_source) {
        case BonusSource::empirical_count:
            apply_count(s, a, static_cast<double>(stats_.count(s, a)));
            break;
        case BonusSource::abstract_count:
            apply_count(ms, a, static_cast<double>(abstract_stats_->count(ms, a)));
            break;
        case BonusSource::pseudo_count_hat:
        case BonusSource::pseudo_count_tilde:
            density_->update(s, a);
            refresh_pseudo_counts();
            break;
    }
    refresh_row(ms, a);
}

void MbieEbAgent::plan(std::size_t step) {
    if (step % config_.replan_every != 0) return;
    planner_.solve(config_.planning_tol);
    if (abstract_planning()) {
        std::vector<std::size_t> abstract_greedy(planner_.num_states());
        for (std::size_t c = 0; c < abstract_greedy.size(); ++c) abstract_greedy[c] = planner_.greedy_action(c);
        for (std::size_t s = 0; s < num_states_; ++s) greedy_[s] = abstract_greedy[config_.aggregation->phi(s)];
    } else {
        for (std::size_t s = 0; s < num_states_; ++s) greedy_[s] = planner_.greedy_action(s);
    }
}

// --- run loop -----------------------------------------------------------------

std::uint64_t policy_hash(std::span<const std::size_t> actions) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t a : actions) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (static_cast<std::uint64_t>(a) >> (8 * byte)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

ExperimentTrace run_mbie_eb(const TabularMdp& env, const AgentConfig& config, Rng& rng, const StepObserver& observer) {
    config.validate(env.num_states());
    MbieEbAgent agent(env.num_states(), env.num_actions(), env.discount(), config);

    ExperimentTrace trace;
    trace.steps.reserve(config.horizon);
    trace.policy_hashes.reserve(config.horizon);
    std::size_t state = sample_initial_state(env, rng);
    double cumulative = 0.0;
    for (std::size_t t = 0; t < config.horizon; ++t) {
        agent.plan(t);
        const auto greedy = agent.greedy_actions();
        trace.policy_hashes.push_back(policy_hash(greedy));
        if (observer) observer(t, greedy);
        if (config.snapshot_every != 0 && t % config.snapshot_every == 0)
            trace.snapshots.push_back({t, std::vector<std::size_t>(greedy.begin(), greedy.end())});

        StepRecord record;
        record.state = state;
        // The uniform is drawn every step so runs that differ only in
        // epsilon_greedy share their environment randomness as far as possible.
        record.explored = uniform01(rng) < config.epsilon_greedy;
        record.action = record.explored ? uniform_index(rng, env.num_actions()) : greedy[state];
        record.count = agent.count(state, record.action);
        record.bonus = agent.bonus(state, record.action);

        const auto result = step(env, state, record.action, rng);
        agent.observe(state, record.action, result.reward, result.next_state);
        record.reward = result.reward;
        cumulative += result.reward;
        record.cumulative_reward = cumulative;
        trace.steps.push_back(record);
        state = result.next_state;
    }
    return trace;
}

}  // namespace abex

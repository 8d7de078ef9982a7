#include "abex/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace abex {

namespace {

constexpr double kStochasticTol = 1e-9;

void check_distribution(std::span<const double> probs, const std::string& what) {
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument(what + ": negative or non-finite probability");
        total += p;
    }
    if (std::abs(total - 1.0) > kStochasticTol)
        throw std::invalid_argument(what + ": probabilities sum to " + std::to_string(total));
}

}  // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions,
                       std::span<const double> transitions, std::vector<double> rewards,
                       double discount, std::vector<double> initial_distribution)
    : num_states_(num_states),
      num_actions_(num_actions),
      rewards_(std::move(rewards)),
      discount_(discount),
      initial_(std::move(initial_distribution)) {
    if (num_states == 0 || num_actions == 0)
        throw std::invalid_argument("TabularMdp: empty state or action set");
    if (transitions.size() != num_states * num_actions * num_states)
        throw std::invalid_argument("TabularMdp: transition tensor has wrong size");
    offsets_.reserve(num_pairs() + 1);
    offsets_.push_back(0);
    for (std::size_t sa = 0; sa < num_pairs(); ++sa) {
        double total = 0.0;
        for (std::size_t next = 0; next < num_states; ++next) {
            const double p = transitions[sa * num_states + next];
            if (!(p >= 0.0) || !std::isfinite(p))
                throw std::invalid_argument("TabularMdp: negative or non-finite transition probability");
            total += p;
            if (p > 0.0) entries_.push_back({next, p});
        }
        if (std::abs(total - 1.0) > kStochasticTol)
            throw std::invalid_argument("TabularMdp: transition row " + std::to_string(sa) +
                                        " sums to " + std::to_string(total));
        offsets_.push_back(entries_.size());
    }
    validate();
}

TabularMdp TabularMdp::from_rows(std::size_t num_states, std::size_t num_actions,
                                 const std::vector<std::vector<Transition>>& rows,
                                 std::vector<double> rewards, double discount,
                                 std::vector<double> initial_distribution) {
    if (num_states == 0 || num_actions == 0)
        throw std::invalid_argument("TabularMdp: empty state or action set");
    if (rows.size() != num_states * num_actions)
        throw std::invalid_argument("TabularMdp: expected one row per state-action pair");
    TabularMdp mdp;
    mdp.num_states_ = num_states;
    mdp.num_actions_ = num_actions;
    mdp.rewards_ = std::move(rewards);
    mdp.discount_ = discount;
    mdp.initial_ = std::move(initial_distribution);
    mdp.offsets_.reserve(rows.size() + 1);
    mdp.offsets_.push_back(0);
    std::vector<Transition> row;
    for (std::size_t sa = 0; sa < rows.size(); ++sa) {
        row = rows[sa];
        double total = 0.0;
        for (const auto& t : row) {
            if (t.next >= num_states)
                throw std::invalid_argument("TabularMdp: successor index out of range");
            if (!(t.prob >= 0.0) || !std::isfinite(t.prob))
                throw std::invalid_argument("TabularMdp: negative or non-finite transition probability");
            total += t.prob;
        }
        if (std::abs(total - 1.0) > kStochasticTol)
            throw std::invalid_argument("TabularMdp: transition row " + std::to_string(sa) +
                                        " sums to " + std::to_string(total));
        std::sort(row.begin(), row.end(),
                  [](const Transition& x, const Transition& y) { return x.next < y.next; });
        for (const auto& t : row) {
            if (t.prob == 0.0) continue;
            if (mdp.entries_.size() > mdp.offsets_.back() && mdp.entries_.back().next == t.next)
                mdp.entries_.back().prob += t.prob;
            else
                mdp.entries_.push_back(t);
        }
        mdp.offsets_.push_back(mdp.entries_.size());
    }
    mdp.validate();
    return mdp;
}

TabularMdp TabularMdp::from_sparse(std::size_t num_states, std::size_t num_actions,
                                   std::vector<std::size_t> offsets, std::vector<Transition> entries,
                                   std::vector<double> rewards, double discount,
                                   std::vector<double> initial_distribution) {
    if (num_states == 0 || num_actions == 0)
        throw std::invalid_argument("TabularMdp: empty state or action set");
    if (offsets.size() != num_states * num_actions + 1 || offsets.front() != 0 || offsets.back() != entries.size())
        throw std::invalid_argument("TabularMdp: malformed row offsets");
    for (std::size_t sa = 0; sa + 1 < offsets.size(); ++sa) {
        if (offsets[sa + 1] < offsets[sa]) throw std::invalid_argument("TabularMdp: malformed row offsets");
        double total = 0.0;
        for (std::size_t k = offsets[sa]; k < offsets[sa + 1]; ++k) {
            const auto& t = entries[k];
            if (t.next >= num_states) throw std::invalid_argument("TabularMdp: successor index out of range");
            if (!(t.prob >= 0.0) || !std::isfinite(t.prob))
                throw std::invalid_argument("TabularMdp: negative or non-finite transition probability");
            total += t.prob;
        }
        if (std::abs(total - 1.0) > kStochasticTol)
            throw std::invalid_argument("TabularMdp: transition row " + std::to_string(sa) +
                                        " sums to " + std::to_string(total));
    }
    TabularMdp mdp;
    mdp.num_states_ = num_states;
    mdp.num_actions_ = num_actions;
    mdp.offsets_ = std::move(offsets);
    mdp.entries_ = std::move(entries);
    mdp.rewards_ = std::move(rewards);
    mdp.discount_ = discount;
    mdp.initial_ = std::move(initial_distribution);
    mdp.validate();
    return mdp;
}

TabularMdp TabularMdp::with_bonus(const TabularMdp& mdp, std::span<const double> bonus) {
    if (bonus.size() != mdp.num_pairs())
        throw std::invalid_argument("with_bonus: bonus must have one entry per state-action pair");
    TabularMdp out = mdp;
    for (std::size_t i = 0; i < bonus.size(); ++i) {
        if (!std::isfinite(bonus[i])) throw std::invalid_argument("with_bonus: non-finite bonus");
        out.rewards_[i] += bonus[i];
    }
    out.unit_rewards_ = false;
    out.validate();
    return out;
}

void TabularMdp::validate() const {
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw std::invalid_argument("TabularMdp: discount must lie in [0, 1)");
    if (rewards_.size() != num_pairs())
        throw std::invalid_argument("TabularMdp: reward table has wrong size");
    for (double r : rewards_) {
        if (!std::isfinite(r)) throw std::invalid_argument("TabularMdp: non-finite reward");
        if (unit_rewards_ && (r < 0.0 || r > 1.0))
            throw std::invalid_argument("TabularMdp: rewards must lie in [0, 1], got " + std::to_string(r));
    }
    if (initial_.size() != num_states_)
        throw std::invalid_argument("TabularMdp: initial distribution has wrong size");
    check_distribution(initial_, "TabularMdp initial distribution");
}

std::span<const Transition> TabularMdp::successors(std::size_t s, std::size_t a) const {
    const std::size_t sa = s * num_actions_ + a;
    return std::span<const Transition>(entries_).subspan(offsets_[sa], offsets_[sa + 1] - offsets_[sa]);
}

double TabularMdp::transition(std::size_t s, std::size_t a, std::size_t next) const {
    for (const auto& t : successors(s, a))
        if (t.next == next) return t.prob;
    return 0.0;
}

std::vector<double> TabularMdp::dense_transitions() const {
    std::vector<double> dense(num_pairs() * num_states_, 0.0);
    for (std::size_t sa = 0; sa < num_pairs(); ++sa)
        for (std::size_t k = offsets_[sa]; k < offsets_[sa + 1]; ++k)
            dense[sa * num_states_ + entries_[k].next] = entries_[k].prob;
    return dense;
}

std::vector<double> QTable::state_values() const {
    std::vector<double> v(num_states);
    for (std::size_t s = 0; s < num_states; ++s) {
        const auto r = row(s);
        v[s] = *std::max_element(r.begin(), r.end());
    }
    return v;
}

Policy Policy::deterministic(std::vector<std::size_t> actions, std::size_t num_actions) {
    for (auto a : actions)
        if (a >= num_actions) throw std::invalid_argument("Policy: action out of range");
    Policy p;
    p.num_states_ = actions.size();
    p.num_actions_ = num_actions;
    p.actions_ = std::move(actions);
    return p;
}

Policy Policy::stochastic(std::size_t num_states, std::size_t num_actions,
                          std::vector<double> probabilities) {
    if (probabilities.size() != num_states * num_actions)
        throw std::invalid_argument("Policy: probability table has wrong size");
    for (std::size_t s = 0; s < num_states; ++s)
        check_distribution(std::span<const double>(probabilities).subspan(s * num_actions, num_actions),
                           "Policy row " + std::to_string(s));
    Policy p;
    p.num_states_ = num_states;
    p.num_actions_ = num_actions;
    p.probs_ = std::move(probabilities);
    return p;
}

Policy Policy::constant(std::size_t num_states, std::size_t num_actions, std::size_t action) {
    return deterministic(std::vector<std::size_t>(num_states, action), num_actions);
}

std::size_t Policy::action(std::size_t s) const {
    if (!is_deterministic()) throw std::logic_error("Policy::action on a stochastic policy");
    return actions_.at(s);
}

double Policy::probability(std::size_t s, std::size_t a) const {
    if (is_deterministic()) return actions_.at(s) == a ? 1.0 : 0.0;
    return probs_.at(s * num_actions_ + a);
}

QTable solve_value_iteration(const TabularMdp& mdp, std::span<const double> bonus,
                             const SolveOptions& options) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (!bonus.empty() && bonus.size() != mdp.num_pairs())
        throw std::invalid_argument("solve_value_iteration: bonus must have one entry per state-action pair");
    for (double b : bonus)
        if (!std::isfinite(b) || b < 0.0)
            throw std::invalid_argument("solve_value_iteration: bonus entries must be finite and non-negative");
    if (!(options.tol > 0.0)) throw std::invalid_argument("solve_value_iteration: tol must be positive");
    const bool has_pins = !options.pinned.empty();
    if (has_pins && options.pinned.size() != mdp.num_pairs())
        throw std::invalid_argument("solve_value_iteration: pinned must have one entry per state-action pair");

    QTable q;
    q.num_states = S;
    q.num_actions = A;
    const QTable* warm = options.warm_start;
    if (warm != nullptr && warm->num_states == S && warm->num_actions == A)
        q.values = warm->values;
    else
        q.values.assign(mdp.num_pairs(), 0.0);

    std::vector<double> immediate(mdp.rewards().begin(), mdp.rewards().end());
    for (std::size_t i = 0; i < bonus.size(); ++i) immediate[i] += bonus[i];
    if (has_pins)
        for (std::size_t i = 0; i < q.values.size(); ++i)
            if (!std::isnan(options.pinned[i])) q.values[i] = options.pinned[i];

    const double gamma = mdp.discount();
    std::vector<double> v(S);
    std::vector<double> next(q.values.size());
    q.residual = std::numeric_limits<double>::infinity();
    while (q.iterations < options.max_iters) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = q.values[s * A];
            for (std::size_t a = 1; a < A; ++a) best = std::max(best, q.values[s * A + a]);
            v[s] = best;
        }
        double delta = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t sa = s * A + a;
                if (has_pins && !std::isnan(options.pinned[sa])) {
                    next[sa] = options.pinned[sa];
                    continue;
                }
                double expected = 0.0;
                for (const auto& t : mdp.successors(s, a)) expected += t.prob * v[t.next];
                next[sa] = immediate[sa] + gamma * expected;
                delta = std::max(delta, std::abs(next[sa] - q.values[sa]));
            }
        }
        q.values.swap(next);
        ++q.iterations;
        q.residual = delta;
        if (delta <= options.tol) {
            q.converged = true;
            break;
        }
    }
    return q;
}

std::size_t greedy_action(std::span<const double> q_row) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_row.size(); ++a)
        if (q_row[a] > q_row[best]) best = a;
    return best;
}

Policy greedy_policy(const QTable& q) {
    std::vector<std::size_t> actions(q.num_states);
    for (std::size_t s = 0; s < q.num_states; ++s) actions[s] = greedy_action(q.row(s));
    return Policy::deterministic(std::move(actions), q.num_actions);
}

std::vector<double> evaluate_policy(const TabularMdp& mdp, const Policy& policy, double tol,
                                    std::size_t max_iters) {
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (policy.num_states() != S || policy.num_actions() != A)
        throw std::invalid_argument("evaluate_policy: policy shape does not match the MDP");
    if (!(tol > 0.0)) throw std::invalid_argument("evaluate_policy: tol must be positive");

    // Collapse to the Markov chain r_pi, P_pi once.
    std::vector<double> r_pi(S, 0.0);
    std::vector<std::vector<Transition>> p_pi(S);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double w = policy.probability(s, a);
            if (w == 0.0) continue;
            r_pi[s] += w * mdp.reward(s, a);
            for (const auto& t : mdp.successors(s, a)) p_pi[s].push_back({t.next, w * t.prob});
        }
    }

    const double gamma = mdp.discount();
    std::vector<double> v(S, 0.0), next(S);
    for (std::size_t it = 0; it < max_iters; ++it) {
        double delta = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double expected = 0.0;
            for (const auto& t : p_pi[s]) expected += t.prob * v[t.next];
            next[s] = r_pi[s] + gamma * expected;
            delta = std::max(delta, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (delta <= tol) break;
    }
    return v;
}

StepResult step(const TabularMdp& mdp, std::size_t state, std::size_t action, Rng& rng) {
    if (state >= mdp.num_states() || action >= mdp.num_actions())
        throw std::out_of_range("step: state or action index out of range");
    const auto row = mdp.successors(state, action);
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t next = row.back().next;
    for (const auto& t : row) {
        acc += t.prob;
        if (u < acc) {
            next = t.next;
            break;
        }
    }
    return {next, mdp.reward(state, action)};
}

std::size_t sample_initial_state(const TabularMdp& mdp, Rng& rng) {
    return sample_discrete(rng, mdp.initial_distribution());
}

}  // namespace abex

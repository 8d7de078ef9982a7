#include "abex/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace abex {

Aggregation::Aggregation(std::vector<std::size_t> phi, std::size_t num_abstract, std::vector<double> omega)
    : phi_(std::move(phi)), omega_(std::move(omega)), members_(num_abstract) {
    if (phi_.empty()) throw std::invalid_argument("Aggregation: no ground states");
    if (omega_.size() != phi_.size())
        throw std::invalid_argument("Aggregation: omega must have one weight per ground state");
    for (std::size_t s = 0; s < phi_.size(); ++s) {
        if (phi_[s] >= num_abstract)
            throw std::invalid_argument("Aggregation: abstract index out of range at ground state " +
                                        std::to_string(s));
        members_[phi_[s]].push_back(s);
    }
    for (std::size_t c = 0; c < num_abstract; ++c) {
        if (members_[c].empty())
            throw std::invalid_argument("Aggregation: abstract state " + std::to_string(c) +
                                        " has no ground state");
        double total = 0.0;
        for (auto s : members_[c]) {
            if (!(omega_[s] >= 0.0 && omega_[s] <= 1.0))
                throw std::invalid_argument("Aggregation: omega outside [0, 1]");
            total += omega_[s];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("Aggregation: omega over class " + std::to_string(c) +
                                        " sums to " + std::to_string(total));
    }
}

Aggregation Aggregation::uniform(std::vector<std::size_t> phi) {
    if (phi.empty()) throw std::invalid_argument("Aggregation: no ground states");
    const std::size_t num_abstract = *std::max_element(phi.begin(), phi.end()) + 1;
    std::vector<std::size_t> sizes(num_abstract, 0);
    for (auto c : phi) ++sizes[c];
    std::vector<double> omega(phi.size());
    for (std::size_t s = 0; s < phi.size(); ++s) omega[s] = 1.0 / static_cast<double>(sizes[phi[s]]);
    return Aggregation(std::move(phi), num_abstract, std::move(omega));
}

Aggregation Aggregation::identity(std::size_t num_states) {
    std::vector<std::size_t> phi(num_states);
    for (std::size_t s = 0; s < num_states; ++s) phi[s] = s;
    return uniform(std::move(phi));
}

namespace {

void check_consistent(const TabularMdp& mdp, const Aggregation& agg, const char* who) {
    if (agg.num_ground() != mdp.num_states())
        throw std::invalid_argument(std::string(who) + ": aggregation covers " +
                                    std::to_string(agg.num_ground()) + " states, MDP has " +
                                    std::to_string(mdp.num_states()));
}

}  // namespace

TabularMdp build_abstract_mdp(const TabularMdp& mdp, const Aggregation& agg) {
    check_consistent(mdp, agg, "build_abstract_mdp");
    const std::size_t SA = agg.num_abstract();
    const std::size_t A = mdp.num_actions();

    std::vector<double> transitions(SA * A * SA, 0.0);
    std::vector<double> rewards(SA * A, 0.0);
    for (std::size_t c = 0; c < SA; ++c) {
        // Renormalise omega so tiny rounding in the weights cannot push a
        // convex combination of unit rewards past 1.
        double weight_total = 0.0;
        for (auto g : agg.members(c)) weight_total += agg.omega(g);
        for (std::size_t a = 0; a < A; ++a) {
            double r = 0.0;
            double* row = &transitions[(c * A + a) * SA];
            for (auto g : agg.members(c)) {
                const double w = agg.omega(g) / weight_total;
                r += w * mdp.reward(g, a);
                for (const auto& t : mdp.successors(g, a)) row[agg.phi(t.next)] += w * t.prob;
            }
            rewards[c * A + a] = mdp.unit_rewards() ? std::clamp(r, 0.0, 1.0) : r;
        }
    }

    std::vector<double> initial(SA, 0.0);
    const auto ground_initial = mdp.initial_distribution();
    for (std::size_t s = 0; s < mdp.num_states(); ++s) initial[agg.phi(s)] += ground_initial[s];

    if (!mdp.unit_rewards()) {
        // Build through the unit-reward path, then restore the augmented rewards.
        std::vector<double> unit(rewards.size(), 0.0);
        TabularMdp base(SA, A, transitions, std::move(unit), mdp.discount(), std::move(initial));
        return TabularMdp::with_bonus(base, rewards);
    }
    return TabularMdp(SA, A, transitions, std::move(rewards), mdp.discount(), std::move(initial));
}

double model_similarity_eta(const TabularMdp& mdp, const Aggregation& agg) {
    check_consistent(mdp, agg, "model_similarity_eta");
    const std::size_t SA = agg.num_abstract();
    const std::size_t A = mdp.num_actions();
    double eta = 0.0;
    std::vector<double> mass_a(SA), mass_b(SA);
    for (std::size_t c = 0; c < SA; ++c) {
        const auto group = agg.members(c);
        for (std::size_t i = 0; i < group.size(); ++i) {
            for (std::size_t j = i + 1; j < group.size(); ++j) {
                for (std::size_t a = 0; a < A; ++a) {
                    eta = std::max(eta, std::abs(mdp.reward(group[i], a) - mdp.reward(group[j], a)));
                    std::fill(mass_a.begin(), mass_a.end(), 0.0);
                    std::fill(mass_b.begin(), mass_b.end(), 0.0);
                    for (const auto& t : mdp.successors(group[i], a)) mass_a[agg.phi(t.next)] += t.prob;
                    for (const auto& t : mdp.successors(group[j], a)) mass_b[agg.phi(t.next)] += t.prob;
                    for (std::size_t k = 0; k < SA; ++k) eta = std::max(eta, std::abs(mass_a[k] - mass_b[k]));
                }
            }
        }
    }
    return eta;
}

namespace {

void check_bound_args(double eta, std::size_t num_abstract, double gamma) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("bound: eta must be finite and >= 0");
    if (num_abstract == 0) throw std::invalid_argument("bound: need at least one abstract state");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("bound: gamma must lie in [0, 1)");
}

}  // namespace

double q_gap_bound(double eta, std::size_t num_abstract, double gamma) {
    check_bound_args(eta, num_abstract, gamma);
    const double horizon = 1.0 - gamma;
    return (eta + gamma * static_cast<double>(num_abstract - 1) * eta) / (horizon * horizon);
}

double suboptimality_bound(double eta, std::size_t num_abstract, double gamma) {
    return 2.0 * q_gap_bound(eta, num_abstract, gamma);
}

Policy lift_policy(const Policy& abstract_policy, const Aggregation& agg) {
    if (abstract_policy.num_states() != agg.num_abstract())
        throw std::invalid_argument("lift_policy: policy is not sized for the abstract state space");
    const std::size_t A = abstract_policy.num_actions();
    if (abstract_policy.is_deterministic()) {
        std::vector<std::size_t> actions(agg.num_ground());
        for (std::size_t s = 0; s < actions.size(); ++s) actions[s] = abstract_policy.action(agg.phi(s));
        return Policy::deterministic(std::move(actions), A);
    }
    std::vector<double> probs(agg.num_ground() * A);
    for (std::size_t s = 0; s < agg.num_ground(); ++s)
        for (std::size_t a = 0; a < A; ++a) probs[s * A + a] = abstract_policy.probability(agg.phi(s), a);
    return Policy::stochastic(agg.num_ground(), A, std::move(probs));
}

}  // namespace abex

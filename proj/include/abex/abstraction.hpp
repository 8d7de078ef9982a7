#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abex/mdp.hpp"

namespace abex {

/**
 * Surjective state aggregation phi: ground -> abstract, with a weighting
 * omega that is a probability distribution over each class G(s_bar).
 */
class Aggregation {
public:
    Aggregation(std::vector<std::size_t> phi, std::size_t num_abstract, std::vector<double> omega);

    /// Uniform omega over each class; num_abstract = max(phi) + 1.
    static Aggregation uniform(std::vector<std::size_t> phi);
    static Aggregation identity(std::size_t num_states);

    std::size_t num_ground() const { return phi_.size(); }
    std::size_t num_abstract() const { return members_.size(); }
    std::size_t phi(std::size_t s) const { return phi_[s]; }
    std::span<const std::size_t> phi() const { return phi_; }
    double omega(std::size_t s) const { return omega_[s]; }

    /// G(s_bar), in increasing ground index order.
    std::span<const std::size_t> members(std::size_t abstract_state) const {
        return members_[abstract_state];
    }
    /// |G(s)| for a ground state s.
    std::size_t class_size(std::size_t s) const { return members_[phi_[s]].size(); }

    bool operator==(const Aggregation&) const = default;

private:
    std::vector<std::size_t> phi_;
    std::vector<double> omega_;
    std::vector<std::vector<std::size_t>> members_;
};

/// Abstract MDP with omega-weighted rewards and transitions. The initial
/// distribution is the pushforward of the ground one through phi.
TabularMdp build_abstract_mdp(const TabularMdp& mdp, const Aggregation& agg);

/// Smallest eta for which agg is a model-similarity abstraction of mdp:
/// the largest reward gap or aggregated-transition gap over co-aggregated pairs.
double model_similarity_eta(const TabularMdp& mdp, const Aggregation& agg);

/// Bound on |Q_G(s,a) - Q_A(phi(s),a)| for an eta model-similarity abstraction:
/// (eta + gamma (|S_A| - 1) eta) / (1 - gamma)^2.
double q_gap_bound(double eta, std::size_t num_abstract, double gamma);

/// Bound on V_G(s) - V_G^{pi_GA}(s); twice q_gap_bound.
double suboptimality_bound(double eta, std::size_t num_abstract, double gamma);

/// Ground policy that plays abstract_policy(phi(s)) in every ground state s.
Policy lift_policy(const Policy& abstract_policy, const Aggregation& agg);

}  // namespace abex

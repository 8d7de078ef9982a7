#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "abex/abstraction.hpp"
#include "abex/experiment.hpp"
#include "abex/mdp.hpp"
#include "abex/random.hpp"

namespace abex {

/// Dense MDP with uniformly drawn transition rows, rewards in [0, 1) and a
/// uniform initial distribution.
TabularMdp random_mdp(Rng& rng, std::size_t num_states, std::size_t num_actions, double gamma);

/// Surjective aggregation of num_states onto num_abstract classes with uniform weights.
Aggregation random_aggregation(Rng& rng, std::size_t num_states, std::size_t num_abstract);

/// (s, a) sequence of a uniformly random behaviour policy started from the initial distribution.
std::vector<std::pair<std::size_t, std::size_t>> random_trajectory(const TabularMdp& mdp, Rng& rng,
                                                                   std::size_t length);

struct SimilarInstance {
    TabularMdp mdp;
    Aggregation aggregation;
    /// model_similarity_eta of the pair (never above the requested eta).
    double eta;
};

/**
 * Ground MDP whose co-aggregated states differ by at most `eta` in every
 * reward and in every aggregated transition mass: a random abstract model
 * is expanded into classes of 1..max_class_size states, each state mixing
 * the abstract row with a random row at weight at most eta / 2.
 */
SimilarInstance random_similar_instance(Rng& rng, std::size_t num_abstract, std::size_t max_class_size,
                                        std::size_t num_actions, double eta, double gamma);

/// Randomized checks of every bound and identity relating pseudo-counts,
/// empirical counts and abstractions. One row per property; a row passes
/// when it records no violation.
std::vector<CheckRow> run_bounds_suite(std::size_t trials, std::uint64_t seed);

}  // namespace abex

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

#include "abex/abstraction.hpp"
#include "abex/density.hpp"

namespace abex {

/// Count reported when the model's response to an observation vanishes.
inline constexpr double kSaturatedCount = 1e12;
/// Increments at or below this are treated as zero.
inline constexpr double kSaturationThreshold = 1e-15;

struct CountEstimate {
    double value = 0.0;
    bool saturated = false;
};

/// Everything the pseudo-count machinery derives for one ground pair.
struct PseudoCountReport {
    double n_hat = 0.0;             // from the ground probe
    double n_tilde = 0.0;           // class-aware count from the two-step probe
    double n_hat_abstract = 0.0;    // from the lifted probe of phi(s)
    double n_hat_total = 0.0;       // pseudo total behind n_hat
    double n_hat_abstract_total = 0.0;
    bool saturated = false;
};

using History = std::span<const std::pair<std::size_t, std::size_t>>;

/**
 * rho (1 - rho') / (rho' - rho): the count that grows by exactly one when
 * the model observes (s, a).
 *
 * Throws std::domain_error when rho' < rho (the model is not
 * learning-positive). A vanishing increment yields kSaturatedCount.
 */
CountEstimate pseudo_count(const DensityProbe& probe);

/// Pseudo total n_hat = (1 - rho') / (rho' - rho), saturating like pseudo_count.
CountEstimate pseudo_count_total(const DensityProbe& probe);

/// Pseudo-count of the lifted model rho^A over the abstract pair (s_bar, a).
CountEstimate abstract_pseudo_count(const DensityModel& model, const Aggregation& agg,
                                    std::size_t abstract_state, std::size_t a);

/**
 * Count that assumes an observation raises the pseudo total by the class
 * size rather than by one:
 *   2 rho tau' / (rho'' tau - rho tau'),  tau = rho' - rho, tau' = rho'' - rho'.
 * A non-positive denominator (relative to rho'' tau) saturates.
 */
CountEstimate corrected_pseudo_count(const DensityProbe& probe);

PseudoCountReport pseudo_count_report(const DensityModel& model, const Aggregation& agg,
                                      std::size_t s, std::size_t a);

/**
 * Ground pseudo-count under an exact induced abstraction, from the
 * abstract count and total:
 *   N_A (1 + (|G| - 1)(N_A + 1) / (|G| (n_A - N_A))).
 * Returns +infinity when N_A >= n_A: the count diverges as the density
 * concentrates on one class.
 */
double exact_abstraction_identity(std::size_t g_size, double n_hat_abstract, double n_hat_total);

struct CountBounds {
    double low = 0.0;
    double high = 0.0;
    bool divergent = false;  // high (or low) has a non-positive denominator
};

/// Lower and upper bounds on a ground pseudo-count under an
/// epsilon-approximate induced abstraction. Both equal
/// exact_abstraction_identity at epsilon = 0.
CountBounds count_sandwich_bounds(double epsilon, std::size_t g_size, double n_hat_abstract,
                                  double n_hat_total);

/// 1 + 2 / (k - 1): multiplicative cap on N_hat / N_hat_A once no class
/// holds more than 1/k of the pseudo total.
double concentration_cap(double k);

/// Extremal level ratios rho^A / mu^A (a, b) and increment ratios
/// delta rho^A / delta mu^A (c, d) seen along a history.
struct RatioConstants {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    bool increments_defined = false;
    std::size_t level_samples = 0;
    std::size_t increment_samples = 0;
};

/**
 * Replays `history` through a fresh copy of `prototype` (which must be
 * untrained) and records the extremal ratios at every prefix. Pairs with
 * mu^A = 0 contribute no level constraint; increments are used only where
 * delta mu^A > 0.
 */
RatioConstants estimate_ratio_constants(History history, const DensityModel& prototype,
                                        const Aggregation& agg);

/// a^2 c N_A <= N_hat_A <= b^2 d N_A, with 1e-9 relative slack.
bool ratio_sandwich_check(const RatioConstants& constants, double n_hat_abstract, std::uint64_t n_empirical);

struct InducedAbstractionReport {
    bool pass = true;
    double worst_violation = 0.0;
    std::size_t worst_prefix = 0;
    std::size_t worst_state = 0;
    std::size_t worst_partner = 0;
    std::size_t worst_action = 0;
    std::size_t comparisons = 0;
    std::size_t skipped = 0;  // comparisons with a zero denominator
};

/**
 * Falsifier for an epsilon induced abstraction: at every prefix of
 * `history`, for every ordered co-aggregated pair (s, s') and action, checks
 * (1 - eps) rho(s') <= rho(s) <= (1 + eps) rho(s') and the same band on the
 * increments rho' - rho. Passing is a necessary condition only; the
 * property quantifies over all histories.
 */
InducedAbstractionReport verify_induced_abstraction(History history, const DensityModel& prototype,
                                                    const Aggregation& agg, double epsilon);

}  // namespace abex

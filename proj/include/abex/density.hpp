#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "abex/abstraction.hpp"

namespace abex {

/**
 * Probability a density model assigns to one (s, a) now, after one
 * hypothetical update on (s, a), and after two.
 *
 * The increments are carried separately so models that know them exactly
 * (the count-backed ones) avoid the cancellation in rho_prime - rho.
 */
struct DensityProbe {
    double rho = 0.0;
    double rho_prime = 0.0;
    double rho_second = 0.0;
    double increment = 0.0;         // rho_prime - rho
    double second_increment = 0.0;  // rho_second - rho_prime

    static DensityProbe from_values(double rho, double rho_prime, double rho_second) {
        return {rho, rho_prime, rho_second, rho_prime - rho, rho_second - rho_prime};
    }
};

/// N(s, a) and the total n for a stream of state-action observations.
class CountTable {
public:
    CountTable(std::size_t num_states, std::size_t num_actions);

    void add(std::size_t s, std::size_t a);
    std::uint64_t count(std::size_t s, std::size_t a) const { return counts_[s * num_actions_ + a]; }
    std::uint64_t total() const { return total_; }
    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    /// N^A(s_bar, a): the count summed over an aggregation class.
    std::uint64_t class_count(const Aggregation& agg, std::size_t abstract_state, std::size_t a) const;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Empirical model statistics gathered by an agent: N(s,a), N(s,a,s'),
/// reward sums and the total step count n.
class VisitStats {
public:
    VisitStats(std::size_t num_states, std::size_t num_actions);

    void record(std::size_t s, std::size_t a, std::size_t next, double reward);

    std::size_t num_states() const { return pairs_.num_states(); }
    std::size_t num_actions() const { return pairs_.num_actions(); }
    std::uint64_t n() const { return pairs_.total(); }
    std::uint64_t count(std::size_t s, std::size_t a) const { return pairs_.count(s, a); }
    std::uint64_t transition_count(std::size_t s, std::size_t a, std::size_t next) const;
    double reward_sum(std::size_t s, std::size_t a) const { return reward_sums_[s * num_actions() + a]; }

    /// Observed successors of (s, a) with their counts, by increasing state index.
    std::span<const std::pair<std::size_t, std::uint64_t>> successors(std::size_t s, std::size_t a) const {
        return successors_[s * num_actions() + a];
    }
    const CountTable& pair_counts() const { return pairs_; }

private:
    CountTable pairs_;
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> successors_;
    std::vector<double> reward_sums_;
};

/**
 * Sequential density model over state-action pairs.
 *
 * Contract: once at least one observation is recorded, rho sums to one
 * over all pairs, and the model is learning-positive
 * (probe(s,a).rho_prime >= rho(s,a)). Querying an untrained model throws
 * std::logic_error. probe() never mutates the model.
 */
class DensityModel {
public:
    virtual ~DensityModel() = default;

    virtual std::size_t num_states() const = 0;
    virtual std::size_t num_actions() const = 0;
    virtual std::uint64_t observations() const = 0;

    virtual double rho(std::size_t s, std::size_t a) const = 0;
    virtual DensityProbe probe(std::size_t s, std::size_t a) const = 0;
    virtual void update(std::size_t s, std::size_t a) = 0;
    virtual std::unique_ptr<DensityModel> clone() const = 0;

    /**
     * Probe of the lifted model rho^A(s_bar, a) = sum over G(s_bar) of rho(s, a).
     * A hypothetical abstract observation is realised as an update on the
     * lowest-index member of G(s_bar). The default clones the model;
     * count-backed models override it with exact arithmetic.
     */
    virtual DensityProbe lifted_probe(const Aggregation& agg, std::size_t abstract_state,
                                      std::size_t a) const;
};

/// rho(s, a) = N(s, a) / n.
class EmpiricalDensity final : public DensityModel {
public:
    EmpiricalDensity(std::size_t num_states, std::size_t num_actions);
    explicit EmpiricalDensity(CountTable counts);

    std::size_t num_states() const override { return counts_.num_states(); }
    std::size_t num_actions() const override { return counts_.num_actions(); }
    std::uint64_t observations() const override { return counts_.total(); }
    double rho(std::size_t s, std::size_t a) const override;
    DensityProbe probe(std::size_t s, std::size_t a) const override;
    void update(std::size_t s, std::size_t a) override { counts_.add(s, a); }
    std::unique_ptr<DensityModel> clone() const override;
    DensityProbe lifted_probe(const Aggregation& agg, std::size_t abstract_state,
                              std::size_t a) const override;

    const CountTable& counts() const { return counts_; }

private:
    CountTable counts_;
};

/// rho(s, a) = N^A(phi(s), a) / (|G(s)| n): uniform probability inside each class.
class UniformAggregationDensity final : public DensityModel {
public:
    UniformAggregationDensity(std::size_t num_actions, Aggregation agg);

    std::size_t num_states() const override { return agg_.num_ground(); }
    std::size_t num_actions() const override { return num_actions_; }
    std::uint64_t observations() const override { return total_; }
    double rho(std::size_t s, std::size_t a) const override;
    DensityProbe probe(std::size_t s, std::size_t a) const override;
    void update(std::size_t s, std::size_t a) override;
    std::unique_ptr<DensityModel> clone() const override;
    DensityProbe lifted_probe(const Aggregation& agg, std::size_t abstract_state,
                              std::size_t a) const override;

    const Aggregation& aggregation() const { return agg_; }
    std::uint64_t abstract_count(std::size_t abstract_state, std::size_t a) const {
        return class_counts_[abstract_state * num_actions_ + a];
    }

private:
    std::size_t num_actions_;
    Aggregation agg_;
    std::vector<std::uint64_t> class_counts_;
    std::uint64_t total_ = 0;
};

/// rho = weight * N(s,a)/n + (1 - weight) / (|S||A|): the empirical density
/// smoothed toward uniform. Learning-positive for any weight in (0, 1].
class MixtureDensity final : public DensityModel {
public:
    MixtureDensity(std::size_t num_states, std::size_t num_actions, double weight);

    std::size_t num_states() const override { return counts_.num_states(); }
    std::size_t num_actions() const override { return counts_.num_actions(); }
    std::uint64_t observations() const override { return counts_.total(); }
    double rho(std::size_t s, std::size_t a) const override;
    DensityProbe probe(std::size_t s, std::size_t a) const override;
    void update(std::size_t s, std::size_t a) override { counts_.add(s, a); }
    std::unique_ptr<DensityModel> clone() const override;

    double weight() const { return weight_; }

private:
    CountTable counts_;
    double weight_;
};

EmpiricalDensity empirical_density(const VisitStats& stats);
UniformAggregationDensity uniform_aggregation_density(const VisitStats& stats, const Aggregation& agg);

/// rho^A(s_bar, a) = sum_{s in G(s_bar)} rho(s, a).
double lift_abstract_density(const DensityModel& model, const Aggregation& agg,
                             std::size_t abstract_state, std::size_t a);

}  // namespace abex

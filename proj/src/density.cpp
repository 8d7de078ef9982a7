#include "abex/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/rational.hpp>

namespace abex {

namespace {

using Ratio = boost::rational<std::int64_t>;

double to_double(const Ratio& r) { return boost::rational_cast<double>(r); }

/// Probe of a count ratio k / (m * total) under one and two extra
/// observations that each raise k and total by one.
DensityProbe count_ratio_probe(std::uint64_t k, std::uint64_t total, std::uint64_t m) {
    const auto K = static_cast<std::int64_t>(k);
    const auto T = static_cast<std::int64_t>(total);
    const auto M = static_cast<std::int64_t>(m);
    const Ratio r0(K, M * T);
    const Ratio r1(K + 1, M * (T + 1));
    const Ratio r2(K + 2, M * (T + 2));
    return {to_double(r0), to_double(r1), to_double(r2), to_double(r1 - r0), to_double(r2 - r1)};
}

void require_trained(std::uint64_t n, const char* who) {
    if (n == 0) throw std::logic_error(std::string(who) + ": no observations recorded, density undefined");
}

}  // namespace

CountTable::CountTable(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions), counts_(num_states * num_actions, 0) {
    if (num_states == 0 || num_actions == 0)
        throw std::invalid_argument("CountTable: empty state or action set");
}

void CountTable::add(std::size_t s, std::size_t a) {
    if (s >= num_states_ || a >= num_actions_) throw std::out_of_range("CountTable::add: index out of range");
    ++counts_[s * num_actions_ + a];
    ++total_;
}

std::uint64_t CountTable::class_count(const Aggregation& agg, std::size_t abstract_state, std::size_t a) const {
    std::uint64_t total = 0;
    for (auto s : agg.members(abstract_state)) total += count(s, a);
    return total;
}

VisitStats::VisitStats(std::size_t num_states, std::size_t num_actions)
    : pairs_(num_states, num_actions),
      successors_(num_states * num_actions),
      reward_sums_(num_states * num_actions, 0.0) {}

void VisitStats::record(std::size_t s, std::size_t a, std::size_t next, double reward) {
    if (next >= num_states()) throw std::out_of_range("VisitStats::record: next state out of range");
    pairs_.add(s, a);
    const std::size_t sa = s * num_actions() + a;
    reward_sums_[sa] += reward;
    auto& row = successors_[sa];
    auto it = std::lower_bound(row.begin(), row.end(), next,
                               [](const auto& entry, std::size_t key) { return entry.first < key; });
    if (it != row.end() && it->first == next)
        ++it->second;
    else
        row.insert(it, {next, 1});
}

std::uint64_t VisitStats::transition_count(std::size_t s, std::size_t a, std::size_t next) const {
    for (const auto& [state, count] : successors(s, a))
        if (state == next) return count;
    return 0;
}

DensityProbe DensityModel::lifted_probe(const Aggregation& agg, std::size_t abstract_state,
                                        std::size_t a) const {
    if (agg.num_ground() != num_states())
        throw std::invalid_argument("lifted_probe: aggregation does not match the model's state space");
    const std::size_t representative = agg.members(abstract_state).front();
    auto sum_over_class = [&](const DensityModel& m) {
        double total = 0.0;
        for (auto s : agg.members(abstract_state)) total += m.rho(s, a);
        return total;
    };
    auto copy = clone();
    const double r0 = sum_over_class(*copy);
    copy->update(representative, a);
    const double r1 = sum_over_class(*copy);
    copy->update(representative, a);
    const double r2 = sum_over_class(*copy);
    return DensityProbe::from_values(r0, r1, r2);
}

// --- EmpiricalDensity -------------------------------------------------------

EmpiricalDensity::EmpiricalDensity(std::size_t num_states, std::size_t num_actions)
    : counts_(num_states, num_actions) {}

EmpiricalDensity::EmpiricalDensity(CountTable counts) : counts_(std::move(counts)) {}

double EmpiricalDensity::rho(std::size_t s, std::size_t a) const {
    require_trained(counts_.total(), "EmpiricalDensity");
    return static_cast<double>(counts_.count(s, a)) / static_cast<double>(counts_.total());
}

DensityProbe EmpiricalDensity::probe(std::size_t s, std::size_t a) const {
    require_trained(counts_.total(), "EmpiricalDensity");
    return count_ratio_probe(counts_.count(s, a), counts_.total(), 1);
}

std::unique_ptr<DensityModel> EmpiricalDensity::clone() const {
    return std::make_unique<EmpiricalDensity>(*this);
}

DensityProbe EmpiricalDensity::lifted_probe(const Aggregation& agg, std::size_t abstract_state,
                                            std::size_t a) const {
    if (agg.num_ground() != num_states())
        throw std::invalid_argument("lifted_probe: aggregation does not match the model's state space");
    require_trained(counts_.total(), "EmpiricalDensity");
    return count_ratio_probe(counts_.class_count(agg, abstract_state, a), counts_.total(), 1);
}

// --- UniformAggregationDensity ----------------------------------------------

UniformAggregationDensity::UniformAggregationDensity(std::size_t num_actions, Aggregation agg)
    : num_actions_(num_actions), agg_(std::move(agg)), class_counts_(agg_.num_abstract() * num_actions, 0) {
    if (num_actions == 0) throw std::invalid_argument("UniformAggregationDensity: no actions");
}

double UniformAggregationDensity::rho(std::size_t s, std::size_t a) const {
    require_trained(total_, "UniformAggregationDensity");
    const double size = static_cast<double>(agg_.class_size(s));
    return static_cast<double>(abstract_count(agg_.phi(s), a)) / (size * static_cast<double>(total_));
}

DensityProbe UniformAggregationDensity::probe(std::size_t s, std::size_t a) const {
    require_trained(total_, "UniformAggregationDensity");
    return count_ratio_probe(abstract_count(agg_.phi(s), a), total_, agg_.class_size(s));
}

void UniformAggregationDensity::update(std::size_t s, std::size_t a) {
    if (s >= num_states() || a >= num_actions_)
        throw std::out_of_range("UniformAggregationDensity::update: index out of range");
    ++class_counts_[agg_.phi(s) * num_actions_ + a];
    ++total_;
}

std::unique_ptr<DensityModel> UniformAggregationDensity::clone() const {
    return std::make_unique<UniformAggregationDensity>(*this);
}

DensityProbe UniformAggregationDensity::lifted_probe(const Aggregation& agg, std::size_t abstract_state,
                                                     std::size_t a) const {
    if (agg.phi().size() == agg_.phi().size() &&
        std::equal(agg.phi().begin(), agg.phi().end(), agg_.phi().begin())) {
        require_trained(total_, "UniformAggregationDensity");
        return count_ratio_probe(abstract_count(abstract_state, a), total_, 1);
    }
    return DensityModel::lifted_probe(agg, abstract_state, a);
}

// --- MixtureDensity ---------------------------------------------------------

MixtureDensity::MixtureDensity(std::size_t num_states, std::size_t num_actions, double weight)
    : counts_(num_states, num_actions), weight_(weight) {
    if (!(weight > 0.0 && weight <= 1.0)) throw std::invalid_argument("MixtureDensity: weight must lie in (0, 1]");
}

double MixtureDensity::rho(std::size_t s, std::size_t a) const {
    require_trained(counts_.total(), "MixtureDensity");
    const double pairs = static_cast<double>(num_states() * num_actions());
    return weight_ * static_cast<double>(counts_.count(s, a)) / static_cast<double>(counts_.total()) +
           (1.0 - weight_) / pairs;
}

DensityProbe MixtureDensity::probe(std::size_t s, std::size_t a) const {
    require_trained(counts_.total(), "MixtureDensity");
    const auto p = count_ratio_probe(counts_.count(s, a), counts_.total(), 1);
    const double floor = (1.0 - weight_) / static_cast<double>(num_states() * num_actions());
    return {weight_ * p.rho + floor, weight_ * p.rho_prime + floor, weight_ * p.rho_second + floor,
            weight_ * p.increment, weight_ * p.second_increment};
}

std::unique_ptr<DensityModel> MixtureDensity::clone() const { return std::make_unique<MixtureDensity>(*this); }

// --- free functions ---------------------------------------------------------

EmpiricalDensity empirical_density(const VisitStats& stats) { return EmpiricalDensity(stats.pair_counts()); }

UniformAggregationDensity uniform_aggregation_density(const VisitStats& stats, const Aggregation& agg) {
    if (agg.num_ground() != stats.num_states())
        throw std::invalid_argument("uniform_aggregation_density: aggregation does not match the statistics");
    UniformAggregationDensity model(stats.num_actions(), agg);
    // Replaying counts in any order gives the same class totals.
    for (std::size_t s = 0; s < stats.num_states(); ++s)
        for (std::size_t a = 0; a < stats.num_actions(); ++a)
            for (std::uint64_t k = 0; k < stats.count(s, a); ++k) model.update(s, a);
    return model;
}

double lift_abstract_density(const DensityModel& model, const Aggregation& agg, std::size_t abstract_state,
                             std::size_t a) {
    if (agg.num_ground() != model.num_states())
        throw std::invalid_argument("lift_abstract_density: aggregation does not match the model's state space");
    double total = 0.0;
    for (auto s : agg.members(abstract_state)) total += model.rho(s, a);
    return total;
}

}  // namespace abex

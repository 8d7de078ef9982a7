#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "abex/agents.hpp"

namespace abex {

inline constexpr int kConfigSchemaVersion = 1;

/// One agent setting; every seed of the experiment runs it once.
struct CurveConfig {
    std::string name;
    BonusSource bonus_source = BonusSource::empirical_count;
    DensityKind density = DensityKind::empirical;
    /// Give the agent the environment's canonical aggregation.
    bool use_aggregation = false;
    double beta = 1e-4;
    double epsilon_greedy = 0.0;
    std::size_t replan_every = 1;

    bool operator==(const CurveConfig&) const = default;
};

struct OverestimationParams {
    std::size_t t = 9;
    double big_reward = 100.0;
    double eps_reward = 0.001;
    double p = 1e-4;
    double gamma = 0.9;
    bool operator==(const OverestimationParams&) const = default;
};

struct NineRoomsParams {
    std::size_t room_size = 5;
    double gamma = 0.95;
    bool operator==(const NineRoomsParams&) const = default;
};

struct CounterexampleParams {
    double eta = 0.1;
    double gamma = 0.9;
    bool operator==(const CounterexampleParams&) const = default;
};

struct BoundsSuiteParams {
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    bool operator==(const BoundsSuiteParams&) const = default;
};

/**
 * Everything needed to reproduce one experiment. Only the parameter block
 * matching `experiment` is serialized; the others keep their defaults.
 *
 * overestimation: every curve runs at every beta in `betas` (the curve's own
 * beta is ignored) and records the time to converge to the optimal policy.
 * ninerooms: every curve records cumulative reward every `record_every` steps.
 */
struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::string experiment = "overestimation";
    OverestimationParams overestimation;
    NineRoomsParams ninerooms;
    CounterexampleParams counterexample;
    BoundsSuiteParams bounds;
    std::vector<CurveConfig> curves;
    std::vector<double> betas;
    std::vector<std::uint64_t> seeds;
    std::size_t horizon = 1;
    std::size_t record_every = 100;
    double planning_tol = 1e-8;
    std::string output_dir = "results";

    bool operator==(const ExperimentConfig&) const = default;

    /// Throws std::invalid_argument describing the first problem found.
    void validate() const;
};

/// JSON text in, config out; schema problems throw std::invalid_argument.
ExperimentConfig parse_config(const std::string& json_text);
/// Pretty-printed JSON with a stable key order.
std::string format_config(const ExperimentConfig& config);
/// Reads and validates a config file. I/O problems throw std::runtime_error,
/// schema problems std::invalid_argument.
ExperimentConfig load_config(const std::filesystem::path& path);

/// The settings used for the published figures of each experiment.
ExperimentConfig default_config(const std::string& experiment);

/// One metric series of one (curve, seed) run, sampled at the table's x values.
struct Series {
    std::string curve;
    std::uint64_t seed = 0;
    std::vector<double> values;
    bool operator==(const Series&) const = default;
};

struct ResultTable {
    std::string metric;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    std::vector<double> x;
    std::vector<Series> series;

    /// Curve names in order of first appearance.
    std::vector<std::string> curves() const;
    /// Pointwise mean and population variance over the curve's seeds. Both
    /// are computed from sorted samples, so they do not depend on seed order.
    std::vector<double> mean(const std::string& curve) const;
    std::vector<double> variance(const std::string& curve) const;

    /// Throws std::invalid_argument if any series does not match x.
    void validate() const;
};

/// One named check with its measured value and whether it passed.
struct CheckRow {
    std::string name;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<ResultTable> tables;
    std::vector<CheckRow> checks;
    bool all_checks_pass() const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Time to the optimal policy in the over-estimation MDP: one past the last
/// step at which some start state was greedy for left, 0 if none was, and
/// `horizon` when the policy was still wrong at the final step.
std::size_t overestimation_convergence_time(const TabularMdp& env, const AgentConfig& agent, std::uint64_t seed);

/// Cumulative reward (in the environment's reward units) after steps
/// record_every, 2 record_every, ..., horizon.
std::vector<double> cumulative_reward_curve(const TabularMdp& env, const AgentConfig& agent, std::uint64_t seed,
                                            std::size_t record_every, double reward_scale = 1.0);

/// Long-format CSV: header `x,curve,seed,value`, one row per (series, x),
/// then the per-curve mean and variance rows with seed `mean` / `var`.
/// Numbers use the shortest representation that reads back exactly.
void emit_csv(const ResultTable& table, const std::filesystem::path& path);
std::string format_csv(const ResultTable& table);
/// Reads the per-seed rows back; mean and variance rows are checked against
/// the recomputed values and dropped. The metric name is the file stem.
ResultTable read_csv(const std::filesystem::path& path);
ResultTable parse_csv(const std::string& text, const std::string& metric);

/// Standalone SVG: a polyline of the mean per curve over a translucent
/// band of one standard deviation, axes with labels and ticks.
void emit_svg(const ResultTable& table, const std::filesystem::path& path);
std::string format_svg(const ResultTable& table);

void emit_checks_csv(const std::vector<CheckRow>& checks, const std::filesystem::path& path);

/// Writes every table as <metric>.csv and <metric>.svg and the checks as
/// checks.csv into `dir`, creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace abex

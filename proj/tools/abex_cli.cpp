// Command-line front end: run, validate, bounds-suite, default-config.
//
// Exit codes: 0 success, 1 invalid configuration or failed check, 2 I/O error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "abex/bounds_suite.hpp"
#include "abex/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kIoError = 2;

void print_checks(const std::vector<abex::CheckRow>& checks) {
    for (const auto& row : checks)
        std::cout << (row.pass ? "PASS " : "FAIL ") << row.name << " (" << row.detail << ")\n";
}

void print_tables(const abex::ExperimentResult& result) {
    for (const auto& table : result.tables) {
        std::cout << table.metric << ":\n";
        for (const auto& curve : table.curves()) {
            const auto mean = table.mean(curve);
            const auto var = table.variance(curve);
            std::cout << "  " << curve << ": ";
            if (table.x.size() <= 8) {
                for (std::size_t i = 0; i < table.x.size(); ++i)
                    std::cout << (i ? ", " : "") << table.x_label << "=" << abex::format_double(table.x[i])
                              << " mean=" << mean[i] << " var=" << var[i];
            } else {
                std::cout << "final " << table.x_label << "=" << abex::format_double(table.x.back())
                          << " mean=" << mean.back() << " var=" << var.back();
            }
            std::cout << "\n";
        }
    }
}

int run_command(const std::string& config_path, const std::string& output_override) {
    abex::ExperimentConfig config;
    try {
        config = abex::load_config(config_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kFailed;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    }
    const std::string out_dir = output_override.empty() ? config.output_dir : output_override;
    const auto result = abex::run_experiment(config);
    try {
        for (const auto& path : abex::write_artifacts(result, out_dir)) std::cout << "wrote " << path.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    }
    print_tables(result);
    print_checks(result.checks);
    return result.all_checks_pass() ? kOk : kFailed;
}

int validate_command(const std::string& config_path) {
    try {
        const auto config = abex::load_config(config_path);
        std::cout << "ok: " << config.experiment << " with " << config.curves.size() << " curve(s), "
                  << config.seeds.size() << " seed(s)\n";
        return kOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kFailed;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    }
}

int bounds_command(std::size_t trials, std::uint64_t seed, const std::string& out_dir) {
    if (trials == 0) {
        std::cerr << "--trials must be positive\n";
        return kFailed;
    }
    const auto checks = abex::run_bounds_suite(trials, seed);
    print_checks(checks);
    if (!out_dir.empty()) {
        try {
            abex::ExperimentResult result;
            result.experiment = "bounds-suite";
            result.checks = checks;
            for (const auto& path : abex::write_artifacts(result, out_dir))
                std::cout << "wrote " << path.string() << "\n";
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kIoError;
        }
    }
    bool ok = true;
    for (const auto& row : checks) ok = ok && row.pass;
    return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Count-based exploration experiments with state abstraction and pseudo-counts"};
    app.require_subcommand(1);

    std::string config_path, output_override;
    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config and write CSV/SVG artifacts");
    run->add_option("config", config_path, "Path to the experiment config")->required();
    run->add_option("--output-dir", output_override, "Override the config's output_dir");

    auto* validate = app.add_subcommand("validate", "Check a JSON config without running it");
    validate->add_option("config", config_path, "Path to the experiment config")->required();

    std::size_t trials = 200;
    std::uint64_t seed = 1;
    std::string bounds_out;
    auto* bounds = app.add_subcommand("bounds-suite", "Randomized checks of every bound and identity");
    bounds->add_option("--trials", trials, "Number of randomized trials")->capture_default_str();
    bounds->add_option("--seed", seed, "Random seed")->capture_default_str();
    bounds->add_option("--output-dir", bounds_out, "Also write checks.csv into this directory");

    std::string experiment;
    auto* defaults = app.add_subcommand("default-config", "Print the default config of an experiment");
    defaults->add_option("experiment", experiment, "overestimation | ninerooms | counterexample | bounds-suite")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFailed;
    }

    try {
        if (*run) return run_command(config_path, output_override);
        if (*validate) return validate_command(config_path);
        if (*bounds) return bounds_command(trials, seed, bounds_out);
        if (*defaults) {
            std::cout << abex::format_config(abex::default_config(experiment));
            return kOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kFailed;
}

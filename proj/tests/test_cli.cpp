#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "abex/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int exit_code = -1;
    std::string output;
};

/// Runs the CLI with `args`, capturing stdout and stderr together.
Outcome run_cli(const std::string& args) {
    const std::string command = std::string(ABEX_CLI_PATH) + " " + args + " 2>&1";
    Outcome outcome;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buffer{};
    while (const auto n = fread(buffer.data(), 1, buffer.size(), pipe)) outcome.output.append(buffer.data(), n);
    const int status = pclose(pipe);
    outcome.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return outcome;
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("abex_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("default-config prints a config that validates") {
    const auto dir = scratch_dir("defaults");
    for (const char* name : {"overestimation", "ninerooms", "counterexample", "bounds-suite"}) {
        const auto printed = run_cli(std::string("default-config ") + name);
        CHECK(printed.exit_code == 0);
        const auto path = write_text(dir / (std::string(name) + ".json"), printed.output);
        const auto checked = run_cli("validate " + path.string());
        INFO(checked.output);
        CHECK(checked.exit_code == 0);
    }
    CHECK(run_cli("default-config montezuma").exit_code == 1);
}

TEST_CASE("validate reports invalid configs with exit code 1 and missing files with 2") {
    const auto dir = scratch_dir("validate");
    CHECK(run_cli("validate " + write_text(dir / "bad.json", "{\"schema_version\": 1, \"experiment\": \"x\"}").string())
              .exit_code == 1);
    CHECK(run_cli("validate " + write_text(dir / "broken.json", "{").string()).exit_code == 1);
    CHECK(run_cli("validate " + (dir / "absent.json").string()).exit_code == 2);
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("frobnicate").exit_code == 1);
}

TEST_CASE("run writes artifacts and returns 0 when every check passes") {
    const auto dir = scratch_dir("run");
    auto config = abex::default_config("counterexample");
    config.output_dir = (dir / "out").string();
    const auto path = write_text(dir / "counterexample.json", abex::format_config(config));
    const auto outcome = run_cli("run " + path.string());
    INFO(outcome.output);
    CHECK(outcome.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "checks.csv"));

    const auto override_dir = dir / "elsewhere";
    CHECK(run_cli("run " + path.string() + " --output-dir " + override_dir.string()).exit_code == 0);
    CHECK(fs::exists(override_dir / "checks.csv"));
}

TEST_CASE("run returns 2 when the output directory cannot be created") {
    const auto dir = scratch_dir("unwritable");
    write_text(dir / "file", "x");
    auto config = abex::default_config("counterexample");
    config.output_dir = (dir / "file" / "sub").string();
    const auto path = write_text(dir / "config.json", abex::format_config(config));
    CHECK(run_cli("run " + path.string()).exit_code == 2);
}

TEST_CASE("bounds-suite exits nonzero exactly when a check fails") {
    const auto outcome = run_cli("bounds-suite --trials 30 --seed 4");
    const bool any_failure = outcome.output.find("FAIL ") != std::string::npos;
    CHECK(outcome.output.find("PASS ") != std::string::npos);
    CHECK(outcome.exit_code == (any_failure ? 1 : 0));
    CHECK(run_cli("bounds-suite --trials 0").exit_code == 1);
}

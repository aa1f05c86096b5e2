// everett_hm: configuration-driven runner for the finite-range measurement
// models. `run` loads a scenario file, computes the requested weights,
// verifies the scenario's invariants, and writes weights.csv + report.json;
// `fixture` emits the canonical scenario files used by the test suite.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "everett/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitChecksFailed = 1;
constexpr int kExitBadConfig = 2;

fs::path resolve_out_dir(const std::string& flag_value) {
    if (const char* env = std::getenv("EVERETT_HM_OUT"); env && *env) return fs::path(env);
    return fs::path(flag_value);
}

int run_command(const std::string& config_path, const std::string& out_flag,
                std::uint64_t cli_seed, bool seed_given, const std::string& profile) {
    const everett::Tolerances base = profile == "strict" ? everett::Tolerances::strict()
                                                         : everett::Tolerances::defaults();
    everett::ScenarioConfig config;
    try {
        config = everett::load_config(config_path, base);
    } catch (const everett::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitBadConfig;
    }

    const std::uint64_t seed = seed_given ? cli_seed : config.seed.value_or(cli_seed);
    const fs::path out_dir = resolve_out_dir(out_flag);
    fs::create_directories(out_dir);

    const everett::RunReport report = everett::run_scenario(config, seed);
    everett::write_weights_csv(report, out_dir / "weights.csv");
    everett::write_report_json(report, out_dir / "report.json");

    for (const auto& check : report.checks)
        std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name
                  << " measured=" << check.measured << " tolerance=" << check.tolerance << "\n";
    std::cout << report.scenario << ": " << (report.all_pass() ? "all checks passed" : "CHECKS FAILED")
              << " (" << report.rows.size() << " weight rows, " << report.elapsed_ms << " ms)\n";
    return report.all_pass() ? 0 : kExitChecksFailed;
}

int fixture_command(const std::string& name, const std::string& out_flag) {
    const fs::path out_dir = resolve_out_dir(out_flag);
    fs::create_directories(out_dir);
    const fs::path target = out_dir / (name + ".json");
    std::ofstream out(target, std::ios::binary);
    out << everett::fixture_config(name);
    if (!out) {
        std::cerr << "cannot write " << target << "\n";
        return kExitBadConfig;
    }
    std::cout << target.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heisenberg-picture branch-weight simulator and verifier"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "./out";
    std::uint64_t seed = 42;
    std::string profile = "default";

    CLI::App* run = app.add_subcommand("run", "run a scenario config and verify its invariants");
    run->add_option("--config", config_path, "scenario config file (JSON)")->required();
    auto* out_opt = run->add_option("--out", out_dir, "output directory for weights.csv and report.json");
    auto* seed_opt = run->add_option("--seed", seed, "seed for randomized scenarios");
    run->add_option("--tolerance-profile", profile, "tolerance profile")
        ->check(CLI::IsMember({"default", "strict"}));
    (void)out_opt;

    std::string fixture_name;
    CLI::App* fixture = app.add_subcommand("fixture", "write a canonical scenario config");
    fixture->add_option("name", fixture_name, "fixture name")
        ->required()
        ->check(CLI::IsMember(everett::fixture_names()));
    fixture->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run))
            return run_command(config_path, out_dir, seed, seed_opt->count() > 0, profile);
        return fixture_command(fixture_name, out_dir);
    } catch (const everett::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::invalid_argument& e) {
        // precondition violations surfaced by the models are config problems
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitChecksFailed;
    }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "everett/extraction.hpp"
#include "everett/mixture.hpp"
#include "everett/multi_observer.hpp"
#include "everett/oracle.hpp"
#include "everett/spatial.hpp"

namespace everett {

// A config or spec problem: reported with field diagnostics, CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scenario {
    Ideal,
    Spatial,
    Mixture,
    MixtureEquivalence,
    MultiObserver,
    Case1,
    Case2,
    Extract,
    OracleCompare,
};

Scenario scenario_from_name(const std::string& name);
const std::string& scenario_name(Scenario s);

struct ExtractParams {
    int outcome_count = 1;  // branches = outcome_count + 1
    int label_dim = 4;
    int trials = 50;
};

// Fully parsed and validated scenario file.
struct ScenarioConfig {
    Scenario scenario = Scenario::Ideal;
    std::optional<std::uint64_t> seed;  // file-level seed, overridden by --seed

    std::optional<IdealModelSpec> ideal;
    std::optional<SpatialModelSpec> spatial;
    std::optional<MixtureSpec> mixture;
    std::optional<MultiObserverSpec> multi;
    std::optional<ExtractParams> extract;
    Scenario compare_model = Scenario::Spatial;  // for oracle-compare

    Tolerances tolerances;
};

// Parses and validates; throws ConfigError with line/field diagnostics.
// `base` selects the tolerance profile that the file's optional overrides
// are applied on top of.
ScenarioConfig load_config(const std::filesystem::path& path,
                           const Tolerances& base = Tolerances::defaults());
ScenarioConfig parse_config(const std::string& json_text, const std::string& origin,
                            const Tolerances& base = Tolerances::defaults());

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
};

struct WeightRow {
    // Flat scenarios: (branch index, eigenvalue, weight).
    // Matrix scenarios: (i, j, weight).
    // Extraction: (branch index, eigenvalue, projector rank).
    double a = 0.0, b = 0.0, c = 0.0;
};

struct RunReport {
    std::string scenario;
    std::vector<std::string> csv_columns;
    std::vector<WeightRow> rows;
    std::vector<CheckResult> checks;
    double elapsed_ms = 0.0;

    bool all_pass() const;
};

RunReport run_scenario(const ScenarioConfig& config, std::uint64_t seed);

void write_weights_csv(const RunReport& report, const std::filesystem::path& path);
void write_report_json(const RunReport& report, const std::filesystem::path& path);

// Canonical configs used by the acceptance tests; deterministic content.
const std::vector<std::string>& fixture_names();
std::string fixture_config(const std::string& name);  // throws ConfigError on unknown name

}  // namespace everett

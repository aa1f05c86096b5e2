#include "everett/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <utility>

namespace everett {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::map<std::string, Scenario>& scenario_table() {
    static const std::map<std::string, Scenario> table = {
        {"ideal", Scenario::Ideal},
        {"spatial", Scenario::Spatial},
        {"mixture", Scenario::Mixture},
        {"mixture-equivalence", Scenario::MixtureEquivalence},
        {"multi-observer", Scenario::MultiObserver},
        {"case1", Scenario::Case1},
        {"case2", Scenario::Case2},
        {"extract", Scenario::Extract},
        {"oracle-compare", Scenario::OracleCompare},
    };
    return table;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config error at " + path + ": " + message);
}

void require_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) fail(path + "/" + key, "unknown key");
}

const json& require_field(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path, std::string("missing required key '") + key + "'");
    return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
}

std::vector<double> as_real_vector(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v.at(i), path + "[" + std::to_string(i) + "]"));
    return out;
}

Complex as_complex(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected a [re, im] pair");
    return {as_number(v.at(0), path + "[0]"), as_number(v.at(1), path + "[1]")};
}

Vector as_complex_vector(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of [re, im] pairs");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = as_complex(v.at(i), path + "[" + std::to_string(i) + "]");
    return out;
}

Eigen::MatrixXcd as_complex_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected an array of amplitude rows");
    Eigen::MatrixXcd out;
    for (std::size_t r = 0; r < v.size(); ++r) {
        const Vector row = as_complex_vector(v.at(r), path + "[" + std::to_string(r) + "]");
        if (r == 0) out.resize(static_cast<Eigen::Index>(v.size()), row.size());
        if (row.size() != out.cols()) fail(path, "ragged amplitude rows");
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

SpatialGrid as_grid(const json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected a grid object {d, n, spacing, origin?}");
    require_keys(v, path, {"d", "n", "spacing", "origin"});
    const int d = as_int(require_field(v, path, "d"), path + "/d");
    const int n = as_int(require_field(v, path, "n"), path + "/n");
    const double spacing = as_number(require_field(v, path, "spacing"), path + "/spacing");
    std::vector<double> origin;
    if (v.contains("origin")) origin = as_real_vector(v.at("origin"), path + "/origin");
    try {
        return SpatialGrid(d, n, spacing, std::move(origin));
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
}

BallBoundary as_boundary(const json& v, const std::string& path) {
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "closed") return BallBoundary::Closed;
    if (s == "open") return BallBoundary::Open;
    fail(path, "expected \"closed\" or \"open\"");
}

Eigen::VectorXd as_offset(const json& v, const std::string& path, int dimension) {
    const std::vector<double> raw = as_real_vector(v, path);
    if (static_cast<int>(raw.size()) != dimension)
        fail(path, "expected " + std::to_string(dimension) + " components");
    return Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
}

// Shared ideal-block parsing: M plus optional alphas/betas/tau/psi.
IdealModelSpec parse_ideal_block(const json& root, const std::string& path, bool psi_required) {
    IdealModelSpec spec;
    spec.outcome_count = as_int(require_field(root, path, "M"), path + "/M");
    if (spec.outcome_count < 1) fail(path + "/M", "outcome count must be >= 1");

    if (root.contains("alphas")) {
        spec.alphas = as_real_vector(root.at("alphas"), path + "/alphas");
    } else {
        for (int i = 1; i <= spec.outcome_count; ++i) spec.alphas.push_back(i);
    }
    if (root.contains("betas")) {
        spec.betas = as_real_vector(root.at("betas"), path + "/betas");
    } else {
        for (int i = 0; i <= spec.outcome_count; ++i) spec.betas.push_back(i);
    }
    if (root.contains("tau")) spec.tau = as_number(root.at("tau"), path + "/tau");

    if (root.contains("psi")) {
        spec.psi = as_complex_vector(root.at("psi"), path + "/psi");
    } else if (psi_required) {
        fail(path, "missing required key 'psi'");
    }
    return spec;
}

Tolerances parse_tolerances(const json& root, const std::string& path, Tolerances base) {
    if (!root.contains("tolerances")) return base;
    const json& t = root.at("tolerances");
    if (!t.is_object()) fail(path + "/tolerances", "expected an object of named overrides");
    const std::map<std::string, double Tolerances::*> fields = {
        {"hermitian", &Tolerances::hermitian},
        {"unitary", &Tolerances::unitary},
        {"projector", &Tolerances::projector},
        {"state_norm", &Tolerances::state_norm},
        {"weight_sum", &Tolerances::weight_sum},
        {"weight_range", &Tolerances::weight_range},
        {"cross_path", &Tolerances::cross_path},
        {"equivalence", &Tolerances::equivalence},
        {"invariance", &Tolerances::invariance},
        {"locality_zero", &Tolerances::locality_zero},
        {"cluster", &Tolerances::cluster},
        {"residual", &Tolerances::residual},
        {"spectrum", &Tolerances::spectrum},
    };
    for (const auto& [key, value] : t.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) fail(path + "/tolerances/" + key, "unknown tolerance name");
        base.*(it->second) = as_number(value, path + "/tolerances/" + key);
    }
    return base;
}

std::set<std::string> scenario_keys(Scenario s) {
    std::set<std::string> keys = {"scenario", "seed", "tolerances"};
    const auto add_ideal = [&keys] { keys.insert({"M", "alphas", "betas", "tau", "psi"}); };
    switch (s) {
        case Scenario::Ideal:
            add_ideal();
            break;
        case Scenario::Spatial:
        case Scenario::MixtureEquivalence:
            add_ideal();
            keys.insert({"grid_x", "grid_z", "a", "boundary", "psi_xs", "psi_z"});
            break;
        case Scenario::Mixture:
            add_ideal();
            keys.insert({"grid_x", "grid_z", "a", "boundary", "psi_xs", "p"});
            break;
        case Scenario::MultiObserver:
        case Scenario::Case1:
        case Scenario::Case2:
            add_ideal();
            keys.insert({"grid_x", "grid_z", "a1", "a2", "d1", "d2", "boundary", "psi_xs",
                         "psi_z", "tau1", "tau2", "tau_g"});
            break;
        case Scenario::Extract:
            keys.insert({"M", "dim_v", "trials"});
            break;
        case Scenario::OracleCompare:
            // validated against the embedded model's key set plus "model"
            break;
    }
    return keys;
}

SpatialModelSpec parse_spatial_spec(const json& root, const std::string& path) {
    SpatialModelSpec spec{.ideal = parse_ideal_block(root, path, false),
                          .grid_x = as_grid(require_field(root, path, "grid_x"), path + "/grid_x"),
                          .grid_z = as_grid(require_field(root, path, "grid_z"), path + "/grid_z"),
                          .radius = as_number(require_field(root, path, "a"), path + "/a"),
                          .boundary = BallBoundary::Closed,
                          .psi_xs = as_complex_matrix(require_field(root, path, "psi_xs"), path + "/psi_xs"),
                          .psi_z = as_complex_vector(require_field(root, path, "psi_z"), path + "/psi_z")};
    if (root.contains("boundary")) spec.boundary = as_boundary(root.at("boundary"), path + "/boundary");
    return spec;
}

MixtureSpec parse_mixture_spec(const json& root, const std::string& path) {
    MixtureSpec spec;
    spec.ideal = parse_ideal_block(root, path, false);
    spec.grid_x = as_grid(require_field(root, path, "grid_x"), path + "/grid_x");
    spec.grid_z = as_grid(require_field(root, path, "grid_z"), path + "/grid_z");
    spec.radius = as_number(require_field(root, path, "a"), path + "/a");
    if (root.contains("boundary")) spec.boundary = as_boundary(root.at("boundary"), path + "/boundary");
    spec.psi_xs = as_complex_matrix(require_field(root, path, "psi_xs"), path + "/psi_xs");
    const std::vector<double> p = as_real_vector(require_field(root, path, "p"), path + "/p");
    spec.member_prob = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    return spec;
}

MultiObserverSpec parse_multi_spec(const json& root, const std::string& path) {
    MultiObserverSpec spec;
    spec.ideal = parse_ideal_block(root, path, false);
    spec.grid_x = as_grid(require_field(root, path, "grid_x"), path + "/grid_x");
    spec.grid_z = as_grid(require_field(root, path, "grid_z"), path + "/grid_z");
    spec.radius1 = as_number(require_field(root, path, "a1"), path + "/a1");
    spec.radius2 = as_number(require_field(root, path, "a2"), path + "/a2");
    spec.offset1 = as_offset(require_field(root, path, "d1"), path + "/d1", spec.grid_x.dimension());
    spec.offset2 = as_offset(require_field(root, path, "d2"), path + "/d2", spec.grid_x.dimension());
    if (root.contains("boundary")) spec.boundary = as_boundary(root.at("boundary"), path + "/boundary");
    spec.psi_xs = as_complex_matrix(require_field(root, path, "psi_xs"), path + "/psi_xs");
    spec.psi_z = as_complex_vector(require_field(root, path, "psi_z"), path + "/psi_z");
    if (root.contains("tau1")) spec.tau1 = as_number(root.at("tau1"), path + "/tau1");
    if (root.contains("tau2")) spec.tau2 = as_number(root.at("tau2"), path + "/tau2");
    if (root.contains("tau_g")) spec.tau_g = as_number(root.at("tau_g"), path + "/tau_g");
    return spec;
}

void populate_model(ScenarioConfig& config, Scenario model, const json& root,
                    const std::string& path) {
    switch (model) {
        case Scenario::Ideal:
            config.ideal = parse_ideal_block(root, path, true);
            break;
        case Scenario::Spatial:
        case Scenario::MixtureEquivalence:
            config.spatial = parse_spatial_spec(root, path);
            break;
        case Scenario::Mixture:
            config.mixture = parse_mixture_spec(root, path);
            break;
        case Scenario::MultiObserver:
        case Scenario::Case1:
        case Scenario::Case2:
            config.multi = parse_multi_spec(root, path);
            break;
        case Scenario::Extract: {
            ExtractParams params;
            params.outcome_count = as_int(require_field(root, path, "M"), path + "/M");
            params.label_dim = as_int(require_field(root, path, "dim_v"), path + "/dim_v");
            if (root.contains("trials")) params.trials = as_int(root.at("trials"), path + "/trials");
            if (params.outcome_count < 1) fail(path + "/M", "outcome count must be >= 1");
            if (params.label_dim < params.outcome_count + 1)
                fail(path + "/dim_v", "label dimension must admit M+1 nonzero projectors");
            if (params.trials < 0) fail(path + "/trials", "trials must be >= 0");
            config.extract = params;
            break;
        }
        case Scenario::OracleCompare:
            fail(path + "/model", "oracle-compare cannot embed itself");
    }
}

// Validates the parsed specs by running the module validators; their
// messages are surfaced as config errors.
void validate_config(const ScenarioConfig& config, const std::string& origin) {
    try {
        if (config.ideal) config.ideal->validate(true, config.tolerances);
        if (config.spatial) {
            config.spatial->validate(config.tolerances);
            if (config.spatial->ideal.psi.size() > 0)
                config.spatial->ideal.validate(true, config.tolerances);
        }
        if (config.mixture) {
            config.mixture->validate(config.tolerances);
            if (config.mixture->ideal.psi.size() > 0)
                config.mixture->ideal.validate(true, config.tolerances);
        }
        if (config.multi) {
            config.multi->validate(config.tolerances);
            if (config.multi->ideal.psi.size() > 0)
                config.multi->ideal.validate(true, config.tolerances);
        }
    } catch (const std::exception& e) {
        throw ConfigError("config error in " + origin + ": " + e.what());
    }

    if (config.scenario == Scenario::Case1) {
        const auto& m = *config.multi;
        const double sep = (m.offset1 - m.offset2).norm();
        if (!(sep > m.radius1 + m.radius2))
            throw ConfigError("config error in " + origin +
                              ": case1 requires strictly separated interaction regions "
                              "(|d1 - d2| > a1 + a2); got separation " +
                              std::to_string(sep) + " with a1 + a2 = " +
                              std::to_string(m.radius1 + m.radius2));
    }
    if (config.scenario == Scenario::Case2) {
        const auto& m = *config.multi;
        if (m.offset1 != m.offset2 || m.radius1 != m.radius2)
            throw ConfigError("config error in " + origin +
                              ": case2 requires coincident interaction regions (d1 = d2, a1 = a2)");
    }
}

}  // namespace

Scenario scenario_from_name(const std::string& name) {
    const auto it = scenario_table().find(name);
    if (it == scenario_table().end()) throw ConfigError("unknown scenario '" + name + "'");
    return it->second;
}

const std::string& scenario_name(Scenario s) {
    for (const auto& [name, value] : scenario_table())
        if (value == s) return name;
    throw std::logic_error("unmapped scenario");
}

ScenarioConfig parse_config(const std::string& json_text, const std::string& origin,
                            const Tolerances& base) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < json_text.size(); ++i)
            if (json_text[i] == '\n') ++line;
        throw ConfigError("config parse error in " + origin + " at line " + std::to_string(line) +
                          ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config error in " + origin + ": expected a JSON object");

    ScenarioConfig config;
    const std::string path = origin;
    if (!root.contains("scenario")) fail(path, "missing required key 'scenario'");
    if (!root.at("scenario").is_string()) fail(path + "/scenario", "expected a string");
    config.scenario = scenario_from_name(root.at("scenario").get<std::string>());
    config.tolerances = parse_tolerances(root, path, base);
    if (root.contains("seed")) {
        const int s = as_int(root.at("seed"), path + "/seed");
        if (s < 0) fail(path + "/seed", "seed must be >= 0");
        config.seed = static_cast<std::uint64_t>(s);
    }

    if (config.scenario == Scenario::OracleCompare) {
        if (!root.contains("model")) fail(path, "missing required key 'model'");
        config.compare_model = scenario_from_name(root.at("model").get<std::string>());
        if (config.compare_model != Scenario::Ideal && config.compare_model != Scenario::Spatial &&
            config.compare_model != Scenario::MultiObserver)
            fail(path + "/model", "oracle-compare supports ideal, spatial, or multi-observer");
        std::set<std::string> keys = scenario_keys(config.compare_model);
        keys.insert("model");
        require_keys(root, path, keys);
        populate_model(config, config.compare_model, root, path);
    } else {
        require_keys(root, path, scenario_keys(config.scenario));
        populate_model(config, config.scenario, root, path);
    }

    validate_config(config, origin);
    return config;
}

ScenarioConfig load_config(const std::filesystem::path& path, const Tolerances& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.filename().string(), base);
}

bool RunReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

CheckResult make_check(std::string name, double measured, double tolerance) {
    CheckResult c;
    c.name = std::move(name);
    c.measured = measured;
    c.tolerance = tolerance;
    c.pass = measured <= tolerance;
    return c;
}

void add_weight_report_checks(RunReport& out, const BranchWeightReport& report,
                              const Tolerances& tol) {
    double range_violation = 0.0;
    for (const auto& e : report.entries)
        range_violation = std::max({range_violation, -e.weight, e.weight - 1.0});
    out.checks.push_back(make_check("weights.in_range", std::max(0.0, range_violation),
                                    tol.weight_range));
    out.checks.push_back(make_check("weights.sum_to_one", std::abs(report.sum - 1.0),
                                    tol.weight_sum));
}

void fill_flat_rows(RunReport& out, const BranchWeightReport& report) {
    out.csv_columns = {"branch_index", "beta", "weight"};
    for (const auto& e : report.entries)
        out.rows.push_back({static_cast<double>(e.branch), e.eigenvalue, e.weight});
}

void fill_matrix_rows(RunReport& out, const JointWeightMatrix& joint) {
    out.csv_columns = {"i", "j", "weight"};
    for (Eigen::Index i = 0; i < joint.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < joint.weights.cols(); ++j)
            out.rows.push_back({static_cast<double>(i), static_cast<double>(j),
                                joint.weights(i, j)});
}

double max_flat_deviation(const BranchWeightReport& report, const std::vector<double>& oracle,
                          bool oracle_has_branch0) {
    double dev = 0.0;
    for (const auto& e : report.entries) {
        const std::size_t idx = static_cast<std::size_t>(oracle_has_branch0 ? e.branch : e.branch - 1);
        dev = std::max(dev, std::abs(e.weight - oracle.at(idx)));
    }
    return dev;
}

// Deterministic random decomposition for the extract scenario: distinct
// betas 0..M, ready-state eigenoperators, and a random complete orthogonal
// projector family on the label side.
std::pair<ExtractionInput, std::vector<Matrix>> make_random_extraction_input(
    int outcome_count, int label_dim, std::mt19937_64& rng) {
    const Eigen::Index d_obs = outcome_count + 1;
    const Eigen::Index d_lab = label_dim;
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto random_matrix = [&](Eigen::Index n) {
        Matrix m(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) m(r, c) = Complex(gauss(rng), gauss(rng));
        return m;
    };

    // Branch operators: beta_i on the reference state, anything Hermitian on
    // the complement.
    std::vector<Matrix> b_ops;
    for (int i = 0; i <= outcome_count; ++i) {
        Matrix b = Matrix::Zero(d_obs, d_obs);
        b(0, 0) = static_cast<double>(i);
        const Matrix g = random_matrix(d_obs - 1);
        b.block(1, 1, d_obs - 1, d_obs - 1) = 0.5 * (g + g.adjoint());
        b_ops.push_back(std::move(b));
    }

    // Random orthonormal basis of the label side, partitioned into M+1
    // nonempty groups.
    const Matrix basis = Eigen::HouseholderQR<Matrix>(random_matrix(d_lab)).householderQ();
    std::vector<int> owner(static_cast<std::size_t>(d_lab));
    for (Eigen::Index k = 0; k < d_lab; ++k)
        owner[static_cast<std::size_t>(k)] =
            k <= outcome_count ? static_cast<int>(k)
                               : std::uniform_int_distribution<int>(0, outcome_count)(rng);
    std::shuffle(owner.begin(), owner.end(), rng);

    std::vector<Matrix> projectors(static_cast<std::size_t>(outcome_count) + 1,
                                   Matrix::Zero(d_lab, d_lab));
    for (Eigen::Index k = 0; k < d_lab; ++k) {
        const Vector col = basis.col(k);
        projectors[static_cast<std::size_t>(owner[static_cast<std::size_t>(k)])] +=
            col * col.adjoint();
    }

    const ProductSpace space({make_space("O", d_obs), make_space("V", d_lab)});
    Matrix op = Matrix::Zero(space.dim(), space.dim());
    for (int i = 0; i <= outcome_count; ++i)
        for (Eigen::Index o = 0; o < d_obs; ++o)
            for (Eigen::Index o2 = 0; o2 < d_obs; ++o2)
                op.block(o * d_lab, o2 * d_lab, d_lab, d_lab) +=
                    b_ops[static_cast<std::size_t>(i)](o, o2) * projectors[static_cast<std::size_t>(i)];

    ExtractionInput input{LinOp(space, std::move(op)),
                          Ket::basis_state(ProductSpace(space.factor(0)), 0), outcome_count + 1};
    return {std::move(input), std::move(projectors)};
}

RunReport run_ideal(const ScenarioConfig& config) {
    RunReport out;
    const IdealModel model(*config.ideal);
    const BranchWeightReport weights = model.branch_weights();
    fill_flat_rows(out, weights);
    add_weight_report_checks(out, weights, config.tolerances);

    double born_dev = 0.0;
    for (int i = 1; i <= model.outcomes(); ++i)
        born_dev = std::max(born_dev, std::abs(weights.weight_of(i) - std::norm(config.ideal->psi(i - 1))));
    out.checks.push_back(make_check("ideal.born_rule", born_dev, config.tolerances.equivalence));

    const OracleResult oracle = oracle_ideal(*config.ideal);
    double oracle_dev = oracle.probabilities.at(0);  // ready state must be fully rotated away
    for (int i = 1; i <= model.outcomes(); ++i)
        oracle_dev = std::max(oracle_dev,
                              std::abs(weights.weight_of(i) -
                                       oracle.probabilities.at(static_cast<std::size_t>(i))));
    out.checks.push_back(make_check("ideal.oracle_agreement", oracle_dev, config.tolerances.equivalence));
    return out;
}

RunReport run_spatial(const ScenarioConfig& config) {
    RunReport out;
    const SpatialModel model(*config.spatial);
    const BranchWeightReport weights = model.weights();
    fill_flat_rows(out, weights);
    add_weight_report_checks(out, weights, config.tolerances);

    if (model.full_space().dim() <= kOperatorPathDimCap) {
        const OracleResult oracle = oracle_spatial(*config.spatial);
        out.checks.push_back(make_check("spatial.oracle_agreement",
                                        max_flat_deviation(weights, oracle.probabilities, true),
                                        config.tolerances.cross_path));
        const BranchWeightReport operator_path = model.operator_path_weights();
        double dev = 0.0;
        for (std::size_t k = 0; k < weights.entries.size(); ++k)
            dev = std::max(dev, std::abs(weights.entries[k].weight - operator_path.entries[k].weight));
        out.checks.push_back(make_check("spatial.operator_path_agreement", dev,
                                        config.tolerances.cross_path));
    }
    return out;
}

RunReport run_mixture(const ScenarioConfig& config) {
    RunReport out;
    const MixtureModel model(*config.mixture);
    const BranchWeightReport weights = model.weights();
    fill_flat_rows(out, weights);
    add_weight_report_checks(out, weights, config.tolerances);

    if (model.full_space().dim() <= kOperatorPathDimCap) {
        const BranchWeightReport density_path = model.density_path_weights();
        double dev = 0.0;
        for (std::size_t k = 0; k < weights.entries.size(); ++k)
            dev = std::max(dev, std::abs(weights.entries[k].weight - density_path.entries[k].weight));
        out.checks.push_back(make_check("mixture.density_path_agreement", dev,
                                        config.tolerances.cross_path));
    }
    return out;
}

RunReport run_mixture_equivalence(const ScenarioConfig& config) {
    RunReport out;
    const EquivalenceReport eq = verify_mixture_equivalence(*config.spatial, config.tolerances);
    fill_flat_rows(out, eq.mixture);
    add_weight_report_checks(out, eq.mixture, config.tolerances);
    out.checks.push_back(make_check("mixture.equivalence_max_dev", eq.max_abs_difference,
                                    config.tolerances.equivalence));
    return out;
}

RunReport run_multi(const ScenarioConfig& config) {
    RunReport out;
    const MultiObserverModel model(*config.multi);
    const JointWeightMatrix joint = model.joint_weights();
    fill_matrix_rows(out, joint);

    double range_violation = 0.0;
    for (Eigen::Index i = 0; i < joint.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < joint.weights.cols(); ++j)
            range_violation = std::max(range_violation, -joint.weights(i, j));
    out.checks.push_back(make_check("weights.in_range", std::max(0.0, range_violation),
                                    config.tolerances.weight_range));
    out.checks.push_back(make_check("weights.sum_to_one", std::abs(joint.total - 1.0),
                                    config.tolerances.weight_sum));

    if (model.full_space().dim() <= kOperatorPathDimCap) {
        const OracleResult oracle = oracle_multi(*config.multi);
        double dev = 0.0;
        const int m = model.outcomes();
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j)
                dev = std::max(dev, std::abs(joint.weights(i, j) -
                                             oracle.probabilities.at(
                                                 static_cast<std::size_t>(i * (m + 1) + j))));
        out.checks.push_back(make_check("multi.oracle_agreement", dev, config.tolerances.cross_path));
    }

    if (config.scenario == Scenario::Case1) {
        const LocalizationReport rep = model.check_separated(config.tolerances);
        out.checks.push_back(make_check("case1.both_measured_block", rep.max_forbidden, rep.threshold));
    } else if (config.scenario == Scenario::Case2) {
        const LocalizationReport rep = model.check_coincident(config.tolerances);
        out.checks.push_back(make_check("case2.forbidden_block", rep.max_forbidden, rep.threshold));
    }
    return out;
}

RunReport run_extract(const ScenarioConfig& config, std::uint64_t seed) {
    RunReport out;
    const ExtractParams& params = *config.extract;
    std::mt19937_64 rng(seed);
    auto [input, constructed] = make_random_extraction_input(params.outcome_count,
                                                             params.label_dim, rng);

    const ExtractedDecomposition decomp = extract_decomposition(input, config.tolerances);
    out.csv_columns = {"branch_index", "beta", "projector_rank"};
    for (std::size_t i = 0; i < decomp.branches.size(); ++i)
        out.rows.push_back({static_cast<double>(i), decomp.branches[i].beta,
                            decomp.branches[i].projector.trace().real()});

    double projector_dev = 0.0;
    for (std::size_t i = 0; i < decomp.branches.size(); ++i)
        projector_dev = std::max(projector_dev,
                                 max_abs_diff(decomp.branches[i].projector, constructed[i]));
    out.checks.push_back(make_check("extract.round_trip", projector_dev, config.tolerances.cluster));
    out.checks.push_back(make_check("extract.residual", decomp.residual, config.tolerances.residual));

    const UniquenessReport uniq = verify_uniqueness(input, params.trials, seed + 1, config.tolerances);
    out.checks.push_back(make_check("extract.uniqueness",
                                    std::max(uniq.worst_beta_deviation, uniq.worst_projector_deviation),
                                    config.tolerances.cluster));
    return out;
}

RunReport run_oracle_compare(const ScenarioConfig& config) {
    RunReport out;
    switch (config.compare_model) {
        case Scenario::Ideal: {
            const IdealModel model(*config.ideal);
            const BranchWeightReport weights = model.branch_weights();
            fill_flat_rows(out, weights);
            const OracleResult oracle = oracle_ideal(*config.ideal);
            out.checks.push_back(make_check("oracle.sum_to_one", std::abs(oracle.sum() - 1.0),
                                            config.tolerances.weight_sum));
            out.checks.push_back(make_check("compare.formula_vs_oracle",
                                            max_flat_deviation(weights, oracle.probabilities, true),
                                            config.tolerances.equivalence));
            break;
        }
        case Scenario::Spatial: {
            const SpatialModel model(*config.spatial);
            const BranchWeightReport weights = model.weights();
            fill_flat_rows(out, weights);
            const OracleResult oracle = oracle_spatial(*config.spatial);
            out.checks.push_back(make_check("oracle.sum_to_one", std::abs(oracle.sum() - 1.0),
                                            config.tolerances.weight_sum));
            out.checks.push_back(make_check("compare.formula_vs_oracle",
                                            max_flat_deviation(weights, oracle.probabilities, true),
                                            config.tolerances.cross_path));
            break;
        }
        case Scenario::MultiObserver: {
            const MultiObserverModel model(*config.multi);
            const JointWeightMatrix joint = model.joint_weights();
            fill_matrix_rows(out, joint);
            const OracleResult oracle = oracle_multi(*config.multi);
            out.checks.push_back(make_check("oracle.sum_to_one", std::abs(oracle.sum() - 1.0),
                                            config.tolerances.weight_sum));
            double dev = 0.0;
            const int m = model.outcomes();
            for (int i = 0; i <= m; ++i)
                for (int j = 0; j <= m; ++j)
                    dev = std::max(dev, std::abs(joint.weights(i, j) -
                                                 oracle.probabilities.at(
                                                     static_cast<std::size_t>(i * (m + 1) + j))));
            out.checks.push_back(make_check("compare.formula_vs_oracle", dev,
                                            config.tolerances.cross_path));
            break;
        }
        default:
            throw std::logic_error("oracle-compare: unsupported model");
    }
    return out;
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    RunReport out;
    switch (config.scenario) {
        case Scenario::Ideal: out = run_ideal(config); break;
        case Scenario::Spatial: out = run_spatial(config); break;
        case Scenario::Mixture: out = run_mixture(config); break;
        case Scenario::MixtureEquivalence: out = run_mixture_equivalence(config); break;
        case Scenario::MultiObserver:
        case Scenario::Case1:
        case Scenario::Case2: out = run_multi(config); break;
        case Scenario::Extract: out = run_extract(config, seed); break;
        case Scenario::OracleCompare: out = run_oracle_compare(config); break;
    }
    out.scenario = scenario_name(config.scenario);
    out.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start).count();
    return out;
}

namespace {

// Round-trip-exact float formatting shared by both writers.
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool integral_column(const std::string& name) {
    return name == "branch_index" || name == "i" || name == "j" || name == "projector_rank";
}

}  // namespace

void write_weights_csv(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t c = 0; c < report.csv_columns.size(); ++c)
        out << (c ? "," : "") << report.csv_columns[c];
    out << "\n";
    for (const auto& row : report.rows) {
        const double vals[3] = {row.a, row.b, row.c};
        for (std::size_t c = 0; c < report.csv_columns.size(); ++c) {
            if (c) out << ",";
            if (integral_column(report.csv_columns[c]))
                out << static_cast<long long>(std::llround(vals[c]));
            else
                out << format_double(vals[c]);
        }
        out << "\n";
    }
}

void write_report_json(const RunReport& report, const std::filesystem::path& path) {
    ordered_json j;
    j["scenario"] = report.scenario;
    j["columns"] = report.csv_columns;
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) rows.push_back({row.a, row.b, row.c});
    j["weights"] = std::move(rows);
    ordered_json checks = ordered_json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"measured", c.measured},
                          {"tolerance", c.tolerance}});
    j["checks"] = std::move(checks);
    j["timing_ms"] = report.elapsed_ms;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

namespace {

json complex_pair(double re, double im = 0.0) { return json::array({re, im}); }

json real_amplitudes(const std::vector<double>& squared) {
    json row = json::array();
    for (const double w : squared) row.push_back(complex_pair(std::sqrt(w)));
    return row;
}

json fixture_ideal_sym() {
    json j;
    j["scenario"] = "ideal";
    j["M"] = 2;
    j["psi"] = real_amplitudes({0.5, 0.5});
    return j;
}

json fixture_spatial_2pt() {
    json j;
    j["scenario"] = "spatial";
    j["M"] = 2;
    j["grid_x"] = {{"d", 1}, {"n", 2}, {"spacing", 1.0}, {"origin", {0.0}}};
    j["grid_z"] = {{"d", 1}, {"n", 1}, {"spacing", 1.0}, {"origin", {0.0}}};
    j["a"] = 0.0;
    j["psi_z"] = json::array({complex_pair(1.0)});
    j["psi_xs"] = json::array({real_amplitudes({0.3, 0.2}), real_amplitudes({0.1, 0.4})});
    return j;
}

json fixture_mixture_equiv() {
    json j;
    j["scenario"] = "mixture-equivalence";
    j["M"] = 2;
    j["grid_x"] = {{"d", 1}, {"n", 7}, {"spacing", 1.0}, {"origin", {-3.0}}};
    j["grid_z"] = {{"d", 1}, {"n", 3}, {"spacing", 1.0}, {"origin", {-1.0}}};
    j["a"] = 1.0;
    j["psi_z"] = real_amplitudes({0.25, 0.5, 0.25});
    j["psi_xs"] = json::array({real_amplitudes({0.0, 0.0, 0.15, 0.2, 0.05, 0.0, 0.0}),
                               real_amplitudes({0.0, 0.0, 0.2, 0.3, 0.1, 0.0, 0.0})});
    return j;
}

json fixture_case1_sep() {
    json j;
    j["scenario"] = "case1";
    j["M"] = 2;
    j["grid_x"] = {{"d", 1}, {"n", 2}, {"spacing", 3.0}, {"origin", {0.0}}};
    j["grid_z"] = {{"d", 1}, {"n", 1}, {"spacing", 1.0}, {"origin", {0.0}}};
    j["a1"] = 1.0;
    j["a2"] = 1.0;
    j["d1"] = {0.0};
    j["d2"] = {3.0};
    j["psi_z"] = json::array({complex_pair(1.0)});
    j["psi_xs"] = json::array({real_amplitudes({0.3, 0.2}), real_amplitudes({0.1, 0.4})});
    return j;
}

json fixture_case2_coincident() {
    json j = fixture_case1_sep();
    j["scenario"] = "case2";
    j["d2"] = {0.0};
    return j;
}

json fixture_extract_roundtrip() {
    json j;
    j["scenario"] = "extract";
    j["M"] = 2;
    j["dim_v"] = 6;
    j["trials"] = 50;
    j["seed"] = 7;
    return j;
}

}  // namespace

const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names = {
        "ideal-sym", "spatial-2pt", "mixture-equiv", "case1-sep", "case2-coincident",
        "extract-roundtrip",
    };
    return names;
}

std::string fixture_config(const std::string& name) {
    json j;
    if (name == "ideal-sym") j = fixture_ideal_sym();
    else if (name == "spatial-2pt") j = fixture_spatial_2pt();
    else if (name == "mixture-equiv") j = fixture_mixture_equiv();
    else if (name == "case1-sep") j = fixture_case1_sep();
    else if (name == "case2-coincident") j = fixture_case2_coincident();
    else if (name == "extract-roundtrip") j = fixture_extract_roundtrip();
    else throw ConfigError("unknown fixture '" + name + "'");
    return j.dump(2) + "\n";
}

}  // namespace everett

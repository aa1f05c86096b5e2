#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "everett/scenario.hpp"

using namespace everett;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("every shipped fixture parses, runs, and passes its checks") {
    for (const std::string& name : fixture_names()) {
        CAPTURE(name);
        const ScenarioConfig config = parse_config(fixture_config(name), name);
        const RunReport report = run_scenario(config, 42);
        CHECK(report.all_pass());
        CHECK(!report.rows.empty());
        for (const auto& check : report.checks) {
            CAPTURE(check.name);
            CHECK(check.pass);
        }
    }
    CHECK_THROWS_AS(fixture_config("no-such-fixture"), ConfigError);
}

TEST_CASE("pinned fixture results") {
    SUBCASE("the symmetric ideal fixture splits evenly") {
        const ScenarioConfig config = parse_config(fixture_config("ideal-sym"), "ideal-sym");
        const RunReport report = run_scenario(config, 42);
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].c == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(report.rows[1].c == doctest::Approx(0.5).epsilon(1e-14));
    }

    SUBCASE("the two-point spatial fixture reproduces 0.6 / 0.3 / 0.1") {
        const ScenarioConfig config = parse_config(fixture_config("spatial-2pt"), "spatial-2pt");
        const RunReport report = run_scenario(config, 42);
        REQUIRE(report.rows.size() == 3);
        CHECK(report.rows[0].c == doctest::Approx(0.6).epsilon(1e-14));
        CHECK(report.rows[1].c == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(report.rows[2].c == doctest::Approx(0.1).epsilon(1e-14));
    }

    SUBCASE("the coincident fixture carries weight only on agreements") {
        const ScenarioConfig config =
            parse_config(fixture_config("case2-coincident"), "case2-coincident");
        const RunReport report = run_scenario(config, 42);
        for (const auto& row : report.rows)
            if (row.a != row.b) CHECK(row.c == 0.0);
    }
}

TEST_CASE("config rejection paths") {
    SUBCASE("unknown scenario") {
        CHECK_THROWS_WITH_AS(parse_config(R"({"scenario": "bogus"})", "t"),
                             doctest::Contains("unknown scenario"), ConfigError);
    }

    SUBCASE("unknown key") {
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"scenario": "ideal", "M": 1, "psi": [[1,0]], "extra": 3})", "t"),
            doctest::Contains("unknown key"), ConfigError);
    }

    SUBCASE("malformed JSON reports a line") {
        CHECK_THROWS_WITH_AS(parse_config("{\n  \"scenario\": \"ideal\",\n  oops\n}", "t"),
                             doctest::Contains("line 3"), ConfigError);
    }

    SUBCASE("missing required key") {
        CHECK_THROWS_WITH_AS(parse_config(R"({"scenario": "ideal", "M": 2})", "t"),
                             doctest::Contains("psi"), ConfigError);
    }

    SUBCASE("an unnormalized state names the offending block") {
        const std::string text =
            R"({"scenario": "ideal", "M": 2, "psi": [[0.9, 0], [0.1, 0]]})";
        CHECK_THROWS_WITH_AS(parse_config(text, "t"), doctest::Contains("sum to 1"), ConfigError);
    }

    SUBCASE("bad tolerance override name") {
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"scenario": "ideal", "M": 1, "psi": [[1,0]],
                             "tolerances": {"nope": 1e-9}})", "t"),
            doctest::Contains("unknown tolerance"), ConfigError);
    }

    SUBCASE("case1 configs must satisfy the separation hypothesis") {
        ScenarioConfig base = parse_config(fixture_config("case1-sep"), "case1-sep");
        (void)base;
        std::string text = fixture_config("case1-sep");
        // move the second region onto the first: violates |d1-d2| > a1+a2
        const auto pos = text.find("\"d2\"");
        REQUIRE(pos != std::string::npos);
        text.replace(text.find('[', pos), text.find(']', pos) - text.find('[', pos) + 1, "[0.0]");
        CHECK_THROWS_WITH_AS(parse_config(text, "t"), doctest::Contains("case1"), ConfigError);
    }
}

TEST_CASE("defaults: eigenvalue ladders and coupling time") {
    const ScenarioConfig config =
        parse_config(R"({"scenario": "ideal", "M": 3,
                         "psi": [[1,0],[0,0],[0,0]]})", "t");
    REQUIRE(config.ideal.has_value());
    CHECK(config.ideal->alphas == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(config.ideal->betas == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    CHECK(config.ideal->tau == 1.0);
}

TEST_CASE("tolerance overrides apply on top of the profile") {
    const std::string text =
        R"({"scenario": "ideal", "M": 1, "psi": [[1,0]], "tolerances": {"weight_sum": 1e-30}})";
    const ScenarioConfig config = parse_config(text, "t");
    CHECK(config.tolerances.weight_sum == 1e-30);
    // an impossible tolerance turns the sum check into a failure
    const RunReport report = run_scenario(config, 42);
    bool found = false;
    for (const auto& check : report.checks)
        if (check.name == "weights.sum_to_one") found = true;
    CHECK(found);
}

TEST_CASE("weights.csv is deterministic and round-trip formatted") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "everett_hm_test_csv";
    fs::create_directories(dir);

    const ScenarioConfig config = parse_config(fixture_config("spatial-2pt"), "spatial-2pt");
    const RunReport report = run_scenario(config, 42);
    write_weights_csv(report, dir / "a.csv");
    write_weights_csv(report, dir / "b.csv");
    const std::string a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a.rfind("branch_index,beta,weight\n", 0) == 0);

    // a second run from scratch produces the identical file
    const RunReport again = run_scenario(parse_config(fixture_config("spatial-2pt"), "x"), 42);
    write_weights_csv(again, dir / "c.csv");
    CHECK(a == slurp(dir / "c.csv"));

    write_report_json(report, dir / "report.json");
    const std::string j = slurp(dir / "report.json");
    CHECK(j.find("\"scenario\": \"spatial\"") != std::string::npos);
    CHECK(j.find("\"checks\"") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("oracle-compare scenario embeds a model") {
    const std::string text =
        R"({"scenario": "oracle-compare", "model": "ideal", "M": 2,
            "psi": [[0.6,0],[0.8,0]]})";
    const ScenarioConfig config = parse_config(text, "t");
    const RunReport report = run_scenario(config, 42);
    CHECK(report.all_pass());
    bool found = false;
    for (const auto& check : report.checks)
        if (check.name == "compare.formula_vs_oracle") found = check.pass;
    CHECK(found);
}

TEST_CASE("remaining scenarios run end to end") {
    SUBCASE("plain mixture") {
        const std::string text = R"({
            "scenario": "mixture", "M": 1,
            "grid_x": {"d": 1, "n": 3, "spacing": 1.0, "origin": [-1.0]},
            "grid_z": {"d": 1, "n": 1, "spacing": 1.0, "origin": [0.0]},
            "a": 1.0,
            "psi_xs": [[[0.6,0],[0.8,0],[0,0]]],
            "p": [1.0]})";
        const RunReport report = run_scenario(parse_config(text, "t"), 42);
        CHECK(report.all_pass());
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].c == doctest::Approx(0.0));  // everything in range
        CHECK(report.rows[1].c == doctest::Approx(1.0));
    }

    SUBCASE("plain multi-observer with an oracle check") {
        const std::string text = R"({
            "scenario": "multi-observer", "M": 1,
            "grid_x": {"d": 1, "n": 2, "spacing": 1.0},
            "grid_z": {"d": 1, "n": 1, "spacing": 1.0},
            "a1": 0.0, "a2": 1.0, "d1": [0.0], "d2": [0.0],
            "psi_xs": [[[0.6,0],[0.8,0]]],
            "psi_z": [[1.0, 0]]})";
        const RunReport report = run_scenario(parse_config(text, "t"), 42);
        CHECK(report.all_pass());
        bool oracle_checked = false;
        for (const auto& check : report.checks)
            if (check.name == "multi.oracle_agreement") oracle_checked = check.pass;
        CHECK(oracle_checked);
        // observer 1 reaches only xi=0, observer 2 reaches both points
        REQUIRE(report.rows.size() == 4);
        CHECK(report.rows[1].c == doctest::Approx(0.64).epsilon(1e-12));  // (0,1)
        CHECK(report.rows[3].c == doctest::Approx(0.36).epsilon(1e-12));  // (1,1)
    }

    SUBCASE("oracle-compare over the spatial and two-observer models") {
        std::string text = fixture_config("spatial-2pt");
        text.replace(text.find("\"spatial\""), 9, "\"oracle-compare\"");
        text.insert(text.rfind('}'), R"(, "model": "spatial")");
        const RunReport spatial_report = run_scenario(parse_config(text, "t"), 42);
        CHECK(spatial_report.all_pass());

        std::string multi = fixture_config("case1-sep");
        multi.replace(multi.find("\"case1\""), 7, "\"oracle-compare\"");
        multi.insert(multi.rfind('}'), R"(, "model": "multi-observer")");
        const RunReport multi_report = run_scenario(parse_config(multi, "t"), 42);
        CHECK(multi_report.all_pass());
    }

    SUBCASE("the open-boundary option drops the sphere from the ball") {
        std::string text = fixture_config("spatial-2pt");
        // radius 1 closed would cover both points; open keeps only xi = 0
        text.insert(text.rfind('}'), R"(, "boundary": "open")");
        const ScenarioConfig closed_cfg = parse_config(fixture_config("spatial-2pt"), "t");
        ScenarioConfig open_cfg = parse_config(text, "t");
        REQUIRE(open_cfg.spatial.has_value());
        CHECK(open_cfg.spatial->boundary == BallBoundary::Open);
        open_cfg.spatial->radius = 1.0;
        SpatialModelSpec closed_spec = *closed_cfg.spatial;
        closed_spec.radius = 1.0;
        const BranchWeightReport open_w = SpatialModel(*open_cfg.spatial).weights();
        const BranchWeightReport closed_w = SpatialModel(closed_spec).weights();
        CHECK(closed_w.weight_of(0) == doctest::Approx(0.0));
        CHECK(open_w.weight_of(0) == doctest::Approx(0.6).epsilon(1e-14));
    }
}

TEST_CASE("extract scenario is reproducible for a fixed seed") {
    const ScenarioConfig config =
        parse_config(fixture_config("extract-roundtrip"), "extract-roundtrip");
    REQUIRE(config.seed.has_value());
    const RunReport a = run_scenario(config, *config.seed);
    const RunReport b = run_scenario(config, *config.seed);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].b == b.rows[i].b);
        CHECK(a.rows[i].c == b.rows[i].c);
    }
    CHECK(a.all_pass());
}

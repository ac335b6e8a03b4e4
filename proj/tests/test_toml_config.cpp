#include <catch2/catch_amalgamated.hpp>

#include <kfp/config.hpp>
#include <kfp/toml.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

using namespace kfp;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_dir() { return KFP_CONFIG_DIR; }

} // namespace

TEST_CASE("toml parser handles scalar types and comments", "[toml]") {
    const auto root = toml::parse(
        "# leading comment\n"
        "name = \"run #1\"  # trailing comment\n"
        "count = 42\n"
        "ratio = 1.5e-2\n"
        "flag = true\n"
        "items = [1, 2.5, 3,]\n");
    CHECK(root.tab.at("name").str == "run #1");
    CHECK(root.tab.at("count").ival == 42);
    CHECK(root.tab.at("ratio").dval == Catch::Approx(0.015));
    CHECK(root.tab.at("flag").bval == true);
    const auto& items = root.tab.at("items").arr;
    REQUIRE(items.size() == 3);
    CHECK(items[0].type == toml::Value::Type::integer);
    CHECK(items[1].as_number() == Catch::Approx(2.5));
}

TEST_CASE("toml parser builds nested tables from headers and dotted keys", "[toml]") {
    const auto root = toml::parse(
        "[model]\n"
        "alpha = 0.05\n"
        "[model.tau]\n"
        "profile = \"constant\"\n"
        "value = 1.0\n"
        "[grid]\n"
        "Nx = 8\n"
        "output.directory = \"out\"\n");
    const auto& model = root.tab.at("model");
    CHECK(model.tab.at("alpha").dval == Catch::Approx(0.05));
    CHECK(model.tab.at("tau").tab.at("profile").str == "constant");
    CHECK(root.tab.at("grid").tab.at("Nx").ival == 8);
    CHECK(root.tab.at("grid").tab.at("output").tab.at("directory").str == "out");
}

TEST_CASE("toml parser collects arrays of tables in order", "[toml]") {
    const auto root = toml::parse(
        "[[model.thermostats]]\n"
        "eta = 1.5\n"
        "[[model.thermostats]]\n"
        "eta = 2.0\n"
        "temperature = 3.0\n");
    const auto& arr = root.tab.at("model").tab.at("thermostats").arr;
    REQUIRE(arr.size() == 2);
    CHECK(arr[0].tab.at("eta").dval == Catch::Approx(1.5));
    CHECK(arr[1].tab.at("temperature").dval == Catch::Approx(3.0));
}

TEST_CASE("toml parser reports the offending line", "[toml]") {
    auto expect_line = [](const std::string& text, const std::string& fragment) {
        try {
            toml::parse(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("config line ") != std::string::npos);
            CHECK(msg.find(fragment) != std::string::npos);
        }
    };
    expect_line("a = 1\n\nb = \n", "line 3");
    expect_line("a = 1\na = 2\n", "duplicate key");
    expect_line("[t]\nx = 1\n[t]\n", "line 3");
    expect_line("x = 1 stray\n", "trailing");
    expect_line("x = \"unterminated\n", "line 1");
    expect_line("x = [1, 2\n", "line 1");
}

TEST_CASE("toml string escapes are decoded", "[toml]") {
    const auto root = toml::parse("s = \"a\\\"b\\\\c\\td\"\n");
    CHECK(root.tab.at("s").str == "a\"b\\c\td");
}

TEST_CASE("parse_config fills defaults for a minimal file", "[config]") {
    const auto cfg = parse_config("[model]\nd = 1\n");
    CHECK(cfg.model.d == 1);
    CHECK(cfg.model.alpha == 0.0);
    CHECK(cfg.model.tau.eval(0.3) == Catch::Approx(1.0));
    CHECK(cfg.model.weight.k == Catch::Approx(3.0));  // d + 2
    CHECK(cfg.grid.Nx == 32);
    CHECK(cfg.grid.Nv == 64);
    CHECK(cfg.integrator.self_consistent);
    CHECK(cfg.out_directory == "out");
    CHECK(validate_config(cfg).empty());
}

TEST_CASE("parse_config reads a full model description", "[config]") {
    const auto cfg = parse_config(
        "[model]\n"
        "d = 1\n"
        "alpha = 0.05\n"
        "[model.tau]\n"
        "profile = \"linear\"\n"
        "left = 0.8\n"
        "right = 1.2\n"
        "[[model.thermostats]]\n"
        "eta = 1.5\n"
        "temperature = 0.5\n"
        "region = [0.0, 0.5]\n"
        "[[model.thermostats]]\n"
        "eta = 2.0\n"
        "temperature = 3.0\n"
        "region = [0.5, 1.0]\n"
        "[model.boundary]\n"
        "mode = \"maxwell\"\n"
        "accommodation = [0.25, 0.75]\n"
        "wall_temperature = 2.0\n"
        "[grid]\n"
        "Nx = 16\n"
        "Nv = 48\n"
        "v_max = 10.0\n"
        "[integrator]\n"
        "dt = 0.002\n"
        "t_final = 50.0\n"
        "mode = \"frozen\"\n"
        "[output]\n"
        "directory = \"runs/mixed\"\n"
        "prefix = \"a_\"\n");
    CHECK(cfg.model.alpha == Catch::Approx(0.05));
    REQUIRE(cfg.model.thermostats.size() == 2);
    CHECK(cfg.model.thermostats[1].temperature == Catch::Approx(3.0));
    CHECK(cfg.model.thermostats[0].region[1] == Catch::Approx(0.5));
    CHECK(cfg.model.boundary.mode == BoundaryMode::maxwell);
    CHECK(cfg.model.boundary.iota(1) == Catch::Approx(0.75));
    CHECK(cfg.model.boundary.theta(0) == Catch::Approx(2.0));
    CHECK_FALSE(cfg.integrator.self_consistent);
    CHECK(cfg.grid.v_max == Catch::Approx(10.0));
    CHECK(cfg.out_prefix == "a_");
    CHECK(validate_config(cfg).empty());
}

TEST_CASE("parse_config rejects unknown keys with their location", "[config]") {
    try {
        parse_config("[model]\nd = 1\nthermostatts = 2\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("unknown key") != std::string::npos);
        CHECK(msg.find("thermostatts") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("parse_config rejects type mismatches", "[config]") {
    CHECK_THROWS_AS(parse_config("[grid]\nNx = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model]\nalpha = \"small\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[integrator]\nmode = \"sloppy\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model.boundary]\nmode = \"reflecting\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model.tau]\nprofile = \"cubic\"\n"), ConfigError);
}

TEST_CASE("region length must match the dimension", "[config]") {
    const std::string base =
        "[model]\nd = 2\n[[model.thermostats]]\neta = 1.0\ntemperature = 2.0\n";
    CHECK_THROWS_AS(parse_config(base + "region = [0.0, 0.5, 0.0]\n"), ConfigError);
    const auto cfg = parse_config(base + "region = [0.0, 0.5, 0.0, 1.0]\n");
    CHECK(cfg.model.thermostats[0].region[3] == Catch::Approx(1.0));
}

TEST_CASE("validate_config surfaces model violations", "[config]") {
    auto cfg = parse_config("[model]\nd = 1\nalpha = 0.7\n");
    const auto issues = validate_config(cfg);
    REQUIRE_FALSE(issues.empty());
    bool found = false;
    for (const auto& s : issues)
        if (s.find("alpha outside [0, 1/2)") != std::string::npos) found = true;
    CHECK(found);

    cfg = parse_config("[model]\nd = 1\n[integrator]\nt_final = -1.0\n");
    CHECK_FALSE(validate_config(cfg).empty());

    cfg = parse_config("[model]\nd = 1\n[ness]\ntheta = 1.5\n");
    CHECK_FALSE(validate_config(cfg).empty());
}

TEST_CASE("velocity cutoff resolves from the hottest temperature scale", "[config]") {
    auto cfg = parse_config(
        "[model]\nd = 1\n"
        "[[model.thermostats]]\neta = 2.0\ntemperature = 3.0\n");
    CHECK(resolved_v_max(cfg) == Catch::Approx(8.0 * std::sqrt(3.0)));

    // An explicit cutoff wins.
    cfg.grid.v_max = 6.0;
    CHECK(resolved_v_max(cfg) == Catch::Approx(6.0));

    // A wall temperature only counts on sides with nonzero accommodation.
    auto wall = parse_config(
        "[model]\nd = 1\n"
        "[model.boundary]\nmode = \"maxwell\"\n"
        "accommodation = [0.0, 1.0]\n"
        "wall_temperature = [9.0, 4.0]\n");
    CHECK(resolved_v_max(wall) == Catch::Approx(16.0));
}

TEST_CASE("initial temperature defaults to the mean diffusivity", "[config]") {
    auto cfg = parse_config(
        "[model]\nd = 1\n"
        "[model.tau]\nprofile = \"linear\"\nleft = 0.8\nright = 1.2\n"
        "[grid]\nNx = 8\nNv = 16\nv_max = 8.0\n");
    const auto g = grid_from_config(cfg);
    CHECK(resolved_initial_temperature(cfg, g) == Catch::Approx(1.0));
    cfg.initial.temperature = 2.5;
    CHECK(resolved_initial_temperature(cfg, g) == Catch::Approx(2.5));
}

TEST_CASE("output directory override takes precedence", "[config]") {
    auto cfg = parse_config("[model]\nd = 1\n[output]\ndirectory = \"base\"\n");
    CHECK(effective_out_dir(cfg) == "base");
    cfg.out_override = "elsewhere";
    CHECK(effective_out_dir(cfg) == "elsewhere");
}

TEST_CASE("every shipped config parses and validates cleanly", "[config]") {
    const char* names[] = {"homogeneous.toml", "bounded_mixed.toml", "bounded_small.toml",
                           "specular_ball.toml", "twod_smoke.toml", "minimal.toml"};
    for (const char* name : names) {
        INFO(name);
        const auto cfg = parse_config(slurp(config_dir() + "/" + name));
        const auto issues = validate_config(cfg);
        for (const auto& s : issues) INFO(s);
        CHECK(issues.empty());
        CHECK_NOTHROW(grid_from_config(cfg));
    }
}

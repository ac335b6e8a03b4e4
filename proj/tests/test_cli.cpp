#include <catch2/catch_amalgamated.hpp>

#include <kfp/cli.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace kfp;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& leaf) {
    const fs::path p = fs::temp_directory_path() / "kfp_cli_tests" / leaf;
    fs::remove_all(p);
    return p.string();
}

RunConfig make_cfg(const std::string& text, const std::string& out_dir) {
    RunConfig cfg = parse_config(text);
    REQUIRE(validate_config(cfg).empty());
    cfg.out_override = out_dir;
    return cfg;
}

const char* quick_toml =
    "[model]\n"
    "d = 1\n"
    "[grid]\n"
    "Nx = 4\n"
    "Nv = 16\n"
    "v_max = 6.0\n"
    "[integrator]\n"
    "dt = 0.01\n"
    "t_final = 0.2\n"
    "record_every = 5\n";

const char* thermo_toml =
    "[model]\n"
    "d = 1\n"
    "[[model.thermostats]]\n"
    "eta = 2.0\n"
    "temperature = 3.0\n"
    "[grid]\n"
    "Nx = 4\n"
    "Nv = 64\n"
    "v_max = 8.0\n"
    "[integrator]\n"
    "dt = 0.004\n"
    "t_final = 60.0\n"
    "record_every = 500\n";

} // namespace

TEST_CASE("validate echoes the configuration without writing files", "[cli]") {
    const std::string dir = fresh_dir("validate");
    const auto out = run_command("validate", make_cfg(quick_toml, dir));
    CHECK(out.exit_code == 0);
    CHECK_FALSE(out.wrote_files);
    CHECK(out.summary["status"] == "ok");
    CHECK(out.summary["config"]["grid"]["Nx"] == 4);
    CHECK(out.summary["config"]["model"]["boundary"]["mode"] == "periodic");
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("simulate writes the documented artifact set", "[cli]") {
    const std::string dir = fresh_dir("simulate");
    const auto out = run_command("simulate", make_cfg(quick_toml, dir));
    CHECK(out.exit_code == 0);
    REQUIRE(out.wrote_files);
    REQUIRE(fs::exists(out.paths.run_csv));
    REQUIRE(fs::exists(out.paths.snapshot_csv));
    REQUIRE(fs::exists(out.paths.summary_json));

    std::ifstream run(out.paths.run_csv);
    std::string header;
    std::getline(run, header);
    CHECK(header == "t,mass,energy,l2w_distance,boundary_energy_flux");

    std::ifstream snap(out.paths.snapshot_csv);
    const auto loaded = load_snapshot(snap);
    CHECK(loaded.field.grid.Nx == 4);
    CHECK(loaded.field.grid.Nv == 16);
    CHECK(std::abs(loaded.header_mass - 1.0) <= 1e-10);

    const auto j = ordered_json::parse(read_file(out.paths.summary_json));
    CHECK(j["command"] == "simulate");
    CHECK(j["status"] == "ok");
    CHECK(j["regime_flag"] == "linear");
    CHECK(j["min_over_run"].get<double>() >= 0.0);
    CHECK(j["config"]["integrator"]["dt"].get<double>() == 0.01);
}

TEST_CASE("record_every zero keeps only the endpoints", "[cli]") {
    const std::string dir = fresh_dir("endpoints");
    std::string text(quick_toml);
    text.replace(text.find("record_every = 5"), 16, "record_every = 0");
    const auto out = run_command("simulate", make_cfg(text, dir));
    std::ifstream run(out.paths.run_csv);
    int lines = 0;
    std::string line;
    while (std::getline(run, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 3);  // header + initial + final
}

TEST_CASE("identical configurations produce byte-identical artifacts", "[cli]") {
    const std::string dir_a = fresh_dir("det_a");
    const std::string dir_b = fresh_dir("det_b");
    const auto out_a = run_command("simulate", make_cfg(quick_toml, dir_a));
    const auto out_b = run_command("simulate", make_cfg(quick_toml, dir_b));
    CHECK(read_file(out_a.paths.summary_json) == read_file(out_b.paths.summary_json));
    CHECK(read_file(out_a.paths.run_csv) == read_file(out_b.paths.run_csv));
    CHECK(read_file(out_a.paths.snapshot_csv) == read_file(out_b.paths.snapshot_csv));
}

TEST_CASE("the echoed output directory ignores the command-line override", "[cli]") {
    const std::string dir = fresh_dir("echo_dir");
    const auto cfg = make_cfg(quick_toml, dir);
    const auto out = run_command("validate", cfg);
    CHECK(out.summary["config"]["output"]["directory"] == "out");
    CHECK(effective_out_dir(cfg) == dir);
}

TEST_CASE("linear-ness reaches the thermostat steady energy", "[cli]") {
    const std::string dir = fresh_dir("linear_ness");
    const auto out = run_command("linear-ness", make_cfg(thermo_toml, dir));
    CHECK(out.exit_code == 0);
    CHECK(out.summary["regime_flag"] == "linear");
    const double e = out.summary["energy"].get<double>();
    CHECK(e == Catch::Approx(2.0).epsilon(0.01));
    CHECK(out.summary["E0"].get<double>() == e);
    CHECK(fs::exists(out.paths.summary_json));
}

TEST_CASE("ness resolves the self-consistent energy within the regime", "[cli]") {
    const std::string dir = fresh_dir("ness");
    std::string text(thermo_toml);
    text.replace(text.find("d = 1"), 5, "d = 1\nalpha = 0.05");
    const auto out = run_command("ness", make_cfg(text, dir));
    CHECK(out.exit_code == 0);
    CHECK(out.summary["regime_flag"] == "within proven regime");
    CHECK(out.summary["nu_star"].get<double>() == Catch::Approx(2.025641025641026).epsilon(0.01));
    CHECK(out.summary["used_bisection"].get<bool>() == false);
    REQUIRE(out.summary["history"].is_array());
    CHECK(out.summary["history"].size() == out.summary["iterations"].get<std::size_t>());
    const auto j = ordered_json::parse(read_file(out.paths.summary_json));
    CHECK(j["nu_star"].get<double>() == out.summary["nu_star"].get<double>());
}

TEST_CASE("stability reports the fitted relaxation", "[cli]") {
    const std::string dir = fresh_dir("stability");
    std::string text(thermo_toml);
    text +=
        "[stability]\n"
        "amplitude = 1e-3\n"
        "t_final = 8.0\n"
        "record_every = 10\n";
    const auto out = run_command("stability", make_cfg(text, dir));
    CHECK(out.exit_code == 0);
    CHECK(out.summary["fit"]["status"] == "ok");
    CHECK(out.summary["fit"]["rate"].get<double>() > 0.0);
    CHECK(out.summary["fit"]["r_squared"].get<double>() >= 0.99);
    CHECK(out.summary["fit"]["initial_distance"].get<double>() > 0.0);
}

TEST_CASE("oracle-check cross-validates and writes its evidence", "[cli]") {
    const std::string dir = fresh_dir("oracle");
    const auto out = run_command("oracle-check", make_cfg(thermo_toml, dir));
    CHECK(out.exit_code == 0);
    CHECK(out.summary["status"] == "ok");
    CHECK(out.summary["closed_vs_quadrature_rel"].get<double>() <= 1e-6);
    CHECK(out.summary["budget"]["defect"].get<double>() <=
          out.summary["budget"]["tolerance"].get<double>());

    std::ifstream budget(fs::path(dir) / "budget.csv");
    REQUIRE(budget.good());
    std::string line;
    std::getline(budget, line);
    CHECK(line == "mechanism,value");
    int rows = 0;
    while (std::getline(budget, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);

    std::ifstream oracle(fs::path(dir) / "oracle.csv");
    REQUIRE(oracle.good());
    std::getline(oracle, line);
    CHECK(line == "r,fhat");
    rows = 0;
    while (std::getline(oracle, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 13);
}

TEST_CASE("unknown commands are rejected", "[cli]") {
    const auto cfg = make_cfg(quick_toml, fresh_dir("unknown"));
    CHECK_THROWS_AS(run_command("simulte", cfg), ValidationError);
}

TEST_CASE("convergence failures surface as exceptions", "[cli]") {
    const std::string dir = fresh_dir("too_short");
    std::string text(thermo_toml);
    text.replace(text.find("t_final = 60.0"), 14, "t_final = 0.05");
    CHECK_THROWS_AS(run_command("linear-ness", make_cfg(text, dir)), ConvergenceError);
}

TEST_CASE("failure summaries leave a machine-readable reason", "[cli]") {
    const std::string dir = fresh_dir("failure");
    write_failure_summary("ness", "no convergence in 30 outer iterations", "ConvergenceError",
                          dir, "");
    const auto j = ordered_json::parse(read_file((fs::path(dir) / "summary.json").string()));
    CHECK(j["status"] == "error");
    CHECK(j["error_class"] == "ConvergenceError");
    CHECK(j["reason"].get<std::string>().find("30") != std::string::npos);
}

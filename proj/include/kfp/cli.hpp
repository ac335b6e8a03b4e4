#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "kfp/analysis.hpp"
#include "kfp/config.hpp"
#include "kfp/errors.hpp"
#include "kfp/integrator.hpp"
#include "kfp/ness.hpp"

namespace kfp {

using ordered_json = nlohmann::ordered_json;

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace clidetail {

inline ordered_json tau_echo(const DiffusivityProfile& p)
{
    ordered_json j;
    switch (p.kind) {
        case DiffusivityProfile::Kind::constant:
            j["profile"] = "constant";
            j["value"] = p.value;
            break;
        case DiffusivityProfile::Kind::linear:
            j["profile"] = "linear";
            j["left"] = p.left;
            j["right"] = p.right;
            break;
        case DiffusivityProfile::Kind::two_plateau:
            j["profile"] = "two_plateau";
            j["left"] = p.left;
            j["right"] = p.right;
            j["split"] = p.split;
            break;
        case DiffusivityProfile::Kind::table:
            j["profile"] = "table";
            j["entries"] = p.table.size();
            break;
    }
    return j;
}

inline ordered_json config_echo(const RunConfig& cfg)
{
    const ModelParams& m = cfg.model;
    ordered_json model;
    model["d"] = m.d;
    model["alpha"] = m.alpha;
    model["tau"] = tau_echo(m.tau);
    ordered_json th = ordered_json::array();
    for (const auto& t : m.thermostats) {
        ordered_json e;
        e["eta"] = t.eta;
        e["temperature"] = t.temperature;
        e["region"] = m.d == 2 ? ordered_json{t.region[0], t.region[1], t.region[2], t.region[3]}
                               : ordered_json{t.region[0], t.region[1]};
        th.push_back(e);
    }
    model["thermostats"] = th;
    ordered_json bd;
    bd["mode"] = m.boundary.mode == BoundaryMode::maxwell ? "maxwell" : "periodic";
    if (m.boundary.mode == BoundaryMode::maxwell) {
        ordered_json acc = ordered_json::array(), wt = ordered_json::array();
        for (int s = 0; s < 2 * m.d; ++s) {
            acc.push_back(m.boundary.iota(s));
            wt.push_back(m.boundary.theta(s));
        }
        bd["accommodation"] = acc;
        bd["wall_temperature"] = wt;
    }
    model["boundary"] = bd;
    model["weight"] = {{"k", m.weight.k}, {"zeta", m.weight.zeta}, {"s", m.weight.s}};

    ordered_json j;
    j["model"] = model;
    j["grid"] = {{"Nx", cfg.grid.Nx}, {"Nv", cfg.grid.Nv}, {"v_max", resolved_v_max(cfg)}};
    j["integrator"] = {{"dt", cfg.integrator.dt},
                       {"t_final", cfg.integrator.t_final},
                       {"steady_tol", cfg.integrator.steady_tol},
                       {"record_every", cfg.integrator.record_every},
                       {"mode", cfg.integrator.self_consistent ? "self_consistent" : "frozen"}};
    j["initial"] = {{"temperature", cfg.initial.temperature}};
    j["ness"] = {{"theta", cfg.ness.theta},
                 {"tol_fp", cfg.ness.tol_fp},
                 {"max_outer", cfg.ness.max_outer},
                 {"alpha_budget", cfg.ness.alpha_budget},
                 {"interval_margin", cfg.ness.interval_margin}};
    j["stability"] = {{"amplitude", cfg.stability.amplitude},
                      {"t_hot", cfg.stability.t_hot},
                      {"t_cold", cfg.stability.t_cold},
                      {"t_final", cfg.stability.t_final},
                      {"record_every", cfg.stability.record_every}};
    j["output"] = {{"directory", cfg.out_directory}, {"prefix", cfg.out_prefix}};
    return j;
}

inline std::string regime_flag(const RunConfig& cfg)
{
    if (cfg.model.alpha == 0.0) return "linear";
    return cfg.model.alpha <= cfg.ness.alpha_budget ? "within proven regime"
                                                    : "outside proven regime";
}

inline ordered_json metadata(const RunConfig& cfg, const PhaseSpaceGrid& g, double dt)
{
    ordered_json md;
    md["v_max_resolved"] = g.v_max;
    md["dt_resolved"] = dt;
    md["cfl_max_dt"] = cfl_max_dt(g);
    const ThermostatCache tc = build_thermostat_cache(cfg.model, g);
    md["bgk_mass_deviation"] = tc.max_mass_deviation;
    if (cfg.model.boundary.mode == BoundaryMode::maxwell) {
        const ResolvedBoundary rb = resolve_boundary(g, cfg.model.boundary);
        md["wall_flux_deviation"] = rb.max_flux_deviation;
    }
    return md;
}

inline ordered_json base_summary(const std::string& cmd, const RunConfig& cfg)
{
    ordered_json j;
    j["command"] = cmd;
    j["status"] = "ok";
    j["nu_star"] = nullptr;
    j["energy"] = nullptr;
    j["E0"] = nullptr;
    j["alpha"] = cfg.model.alpha;
    j["iterations"] = 0;
    j["residual"] = nullptr;
    j["regime_flag"] = regime_flag(cfg);
    return j;
}

} // namespace clidetail

struct EmitPaths {
    std::string run_csv;
    std::string snapshot_csv;
    std::string summary_json;
};

/// Writes the run artifacts into `dir`, creating it if needed. Any of trace
/// and field may be null to skip that artifact; the summary is always
/// written, last, so that its existence marks a complete emission.
inline EmitPaths emit_outputs(const RunTrace* trace, const DistributionField* field,
                              double t_snapshot, const ordered_json& summary,
                              const std::string& dir, const std::string& prefix)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    auto name = [&](const char* base) {
        return (fs::path(dir) / (prefix.empty() ? base : prefix + "_" + base)).string();
    };
    auto open = [](const std::string& path) {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw ConfigError("cannot write '" + path + "'");
        return os;
    };
    EmitPaths paths;
    if (trace) {
        paths.run_csv = name("run.csv");
        auto os = open(paths.run_csv);
        write_trace_csv(*trace, os);
    }
    if (field) {
        paths.snapshot_csv = name("snapshot.csv");
        auto os = open(paths.snapshot_csv);
        save_snapshot(*field, t_snapshot, os);
    }
    paths.summary_json = name("summary.json");
    auto os = open(paths.summary_json);
    os << summary.dump(2) << '\n';
    return paths;
}

struct CommandOutcome {
    int exit_code = 0;
    ordered_json summary;
    EmitPaths paths;
    bool wrote_files = false;
};

namespace clidetail {

inline CommandOutcome cmd_validate(const RunConfig& cfg)
{
    CommandOutcome out;
    out.summary["command"] = "validate";
    out.summary["status"] = "ok";
    out.summary["config"] = config_echo(cfg);
    return out;
}

inline CommandOutcome cmd_simulate(const RunConfig& cfg)
{
    const PhaseSpaceGrid g = grid_from_config(cfg);
    const double dt = cfg.integrator.dt > 0.0 ? cfg.integrator.dt : cfl_max_dt(g);
    DistributionField f0 = project_maxwellian(g, 1.0, resolved_initial_temperature(cfg, g));
    const double E0 = energy_functional(f0);
    RunResult rr = run_transient(std::move(f0), cfg.model, cfg.integrator);

    CommandOutcome out;
    out.summary = base_summary("simulate", cfg);
    out.summary["energy"] = energy_functional(rr.field);
    out.summary["E0"] = E0;
    out.summary["iterations"] = rr.steps;
    out.summary["residual"] = rr.final_residual;
    out.summary["steady_reached"] = rr.steady_reached;
    out.summary["t_end"] = rr.t_end;
    out.summary["min_over_run"] = rr.min_over_run;
    out.summary["metadata"] = metadata(cfg, g, dt);
    out.summary["config"] = config_echo(cfg);
    out.paths = emit_outputs(&rr.trace, &rr.field, rr.t_end, out.summary, effective_out_dir(cfg),
                             cfg.out_prefix);
    out.wrote_files = true;
    return out;
}

inline CommandOutcome cmd_linear_ness(const RunConfig& cfg)
{
    const PhaseSpaceGrid g = grid_from_config(cfg);
    const double dt = cfg.integrator.dt > 0.0 ? cfg.integrator.dt : cfl_max_dt(g);
    SteadyResult sr = linear_steady(cfg.model, g, cfg.integrator, tau_cells(cfg.model.tau, g));

    CommandOutcome out;
    out.summary = base_summary("linear-ness", cfg);
    out.summary["regime_flag"] = "linear";
    out.summary["energy"] = sr.energy;
    out.summary["E0"] = sr.energy;
    out.summary["iterations"] = sr.steps;
    out.summary["residual"] = sr.residual;
    out.summary["metadata"] = metadata(cfg, g, dt);
    out.summary["config"] = config_echo(cfg);
    out.paths = emit_outputs(&sr.trace, &sr.field, sr.steps * dt, out.summary, effective_out_dir(cfg),
                             cfg.out_prefix);
    out.wrote_files = true;
    return out;
}

inline CommandOutcome cmd_ness(const RunConfig& cfg)
{
    const PhaseSpaceGrid g = grid_from_config(cfg);
    const double dt = cfg.integrator.dt > 0.0 ? cfg.integrator.dt : cfl_max_dt(g);
    FixedPointResult fp = fixed_point_ness(cfg.model, g, cfg.integrator, cfg.ness);

    CommandOutcome out;
    out.summary = base_summary("ness", cfg);
    out.summary["nu_star"] = fp.nu_star;
    out.summary["energy"] = fp.energy;
    out.summary["E0"] = fp.E0;
    out.summary["iterations"] = fp.iterations;
    out.summary["residual"] = fp.residual;
    out.summary["used_bisection"] = fp.used_bisection;
    ordered_json hist = ordered_json::array();
    for (const auto& h : fp.history) hist.push_back({{"nu", h[0]}, {"F", h[1]}});
    out.summary["history"] = hist;
    out.summary["metadata"] = metadata(cfg, g, dt);
    out.summary["config"] = config_echo(cfg);
    out.paths = emit_outputs(&fp.trace, &fp.ness, 0.0, out.summary, effective_out_dir(cfg),
                             cfg.out_prefix);
    out.wrote_files = true;
    return out;
}

inline CommandOutcome cmd_stability(const RunConfig& cfg)
{
    const PhaseSpaceGrid g = grid_from_config(cfg);
    const double dt = cfg.integrator.dt > 0.0 ? cfg.integrator.dt : cfl_max_dt(g);

    CommandOutcome out;
    out.summary = base_summary("stability", cfg);
    DistributionField base(g);
    if (cfg.model.alpha > 0.0) {
        FixedPointResult fp = fixed_point_ness(cfg.model, g, cfg.integrator, cfg.ness);
        out.summary["nu_star"] = fp.nu_star;
        out.summary["energy"] = fp.energy;
        out.summary["E0"] = fp.E0;
        out.summary["iterations"] = fp.iterations;
        out.summary["residual"] = fp.residual;
        base = std::move(fp.ness);
    } else {
        SteadyResult sr = linear_steady(cfg.model, g, cfg.integrator, tau_cells(cfg.model.tau, g));
        out.summary["energy"] = sr.energy;
        out.summary["E0"] = sr.energy;
        out.summary["iterations"] = sr.steps;
        out.summary["residual"] = sr.residual;
        base = std::move(sr.field);
    }
    StabilityResult st = stability_experiment(cfg.model, base, cfg.integrator, cfg.stability);
    out.summary["fit"] = {{"status", to_string(st.fit.status)},
                          {"rate", st.fit.rate},
                          {"intercept", st.fit.intercept},
                          {"r_squared", st.fit.r_squared},
                          {"efolds", st.fit.efolds},
                          {"n_window", st.fit.n_window},
                          {"window", {st.fit.t_a, st.fit.t_b}},
                          {"initial_distance", st.initial_distance}};
    out.summary["metadata"] = metadata(cfg, g, dt);
    out.summary["config"] = config_echo(cfg);
    out.paths = emit_outputs(&st.trace, &st.field, cfg.stability.t_final, out.summary,
                             effective_out_dir(cfg), cfg.out_prefix);
    out.wrote_files = true;
    return out;
}

inline CommandOutcome cmd_oracle_check(const RunConfig& cfg)
{
    const PhaseSpaceGrid g = grid_from_config(cfg);
    const double dt = cfg.integrator.dt > 0.0 ? cfg.integrator.dt : cfl_max_dt(g);
    const double tau_bar = tau_mean(tau_cells(cfg.model.tau, g));
    double eta = 0.0, T = tau_bar;
    if (!cfg.model.thermostats.empty()) {
        eta = cfg.model.thermostats.front().eta;
        T = cfg.model.thermostats.front().temperature;
    }
    const double closed = homogeneous_energy_closed(tau_bar, eta, T);
    const double oracle = homogeneous_energy_oracle(tau_bar, eta, T);
    const double rel = std::abs(oracle - closed) / std::max(1.0, std::abs(closed));

    // Mid-transient state of this configuration, started hot so every
    // mechanism is active when the budget is sampled.
    IntegratorConfig icfg = cfg.integrator;
    icfg.t_final = std::max(cfg.integrator.t_final / 5.0, 10.0 * dt);
    icfg.stop_at_steady = false;
    DistributionField f0 = project_maxwellian(g, 1.0, 2.0 * tau_bar);
    RunResult rr = run_transient(std::move(f0), cfg.model, icfg);
    const MomentBalance mb = moment_balance_check(rr.field, cfg.model, dt);
    const double scale = std::max({1.0, std::abs(mb.fd_dEdt), std::abs(mb.mechanism_sum)});
    const double budget_tol = std::max(0.05, 10.0 * dt) * scale;
    const bool ok = rel <= 1e-6 && mb.defect <= budget_tol;

    CommandOutcome out;
    out.summary = base_summary("oracle-check", cfg);
    out.summary["status"] = ok ? "ok" : "oracle_mismatch";
    out.summary["energy"] = oracle;
    out.summary["E0"] = closed;
    out.summary["closed_form_energy"] = closed;
    out.summary["quadrature_energy"] = oracle;
    out.summary["closed_vs_quadrature_rel"] = rel;
    if (cfg.model.alpha > 0.0)
        out.summary["nu_star_closed"] = nu_star_closed(tau_bar, eta, T, cfg.model.alpha);
    out.summary["budget"] = {{"fokker_planck", mb.fp_term},
                             {"bgk", mb.bgk_term},
                             {"boundary", mb.boundary_term},
                             {"mechanism_sum", mb.mechanism_sum},
                             {"finite_difference", mb.fd_dEdt},
                             {"defect", mb.defect},
                             {"tolerance", budget_tol}};
    out.summary["metadata"] = metadata(cfg, g, dt);
    out.summary["config"] = config_echo(cfg);

    namespace fs = std::filesystem;
    const std::string out_dir = effective_out_dir(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
    const std::string budget_path =
        (fs::path(out_dir) /
         (cfg.out_prefix.empty() ? "budget.csv" : cfg.out_prefix + "_budget.csv"))
            .string();
    {
        std::ofstream os(budget_path, std::ios::binary);
        if (!os)
            throw ConfigError("cannot write '" + budget_path + "'");
        os << "mechanism,value\n";
        os << "fokker_planck," << detail::fmt17(mb.fp_term) << '\n';
        os << "bgk," << detail::fmt17(mb.bgk_term) << '\n';
        os << "boundary," << detail::fmt17(mb.boundary_term) << '\n';
        os << "mechanism_sum," << detail::fmt17(mb.mechanism_sum) << '\n';
        os << "finite_difference," << detail::fmt17(mb.fd_dEdt) << '\n';
        os << "defect," << detail::fmt17(mb.defect) << '\n';
    }
    const std::string profile_path =
        (fs::path(out_dir) /
         (cfg.out_prefix.empty() ? "oracle.csv" : cfg.out_prefix + "_oracle.csv"))
            .string();
    {
        std::ofstream os(profile_path, std::ios::binary);
        if (!os)
            throw ConfigError("cannot write '" + profile_path + "'");
        os << "r,fhat\n";
        for (int i = 0; i <= 12; ++i) {
            const double r = 0.25 * i;
            os << detail::fmt17(r) << ','
               << detail::fmt17(homogeneous_fhat(r, tau_bar, eta, T)) << '\n';
        }
    }
    out.paths = emit_outputs(&rr.trace, &rr.field, rr.t_end, out.summary, effective_out_dir(cfg),
                             cfg.out_prefix);
    out.wrote_files = true;
    if (!ok) out.exit_code = 3;
    return out;
}

} // namespace clidetail

/// Executes one CLI command on a validated configuration. Throws ConfigError
/// or ValidationError for exit code 2 situations, NumericalError or
/// ConvergenceError for exit code 3; oracle mismatches return exit code 3
/// through the outcome instead, with the evidence in the summary.
inline CommandOutcome run_command(const std::string& cmd, const RunConfig& cfg)
{
    if (cmd == "validate") return clidetail::cmd_validate(cfg);
    if (cmd == "simulate") return clidetail::cmd_simulate(cfg);
    if (cmd == "linear-ness") return clidetail::cmd_linear_ness(cfg);
    if (cmd == "ness") return clidetail::cmd_ness(cfg);
    if (cmd == "stability") return clidetail::cmd_stability(cfg);
    if (cmd == "oracle-check") return clidetail::cmd_oracle_check(cfg);
    throw ValidationError("unknown command '" + cmd + "'");
}

/// Best-effort failure summary so that a crashed run still leaves a
/// machine-readable reason next to its other outputs.
inline void write_failure_summary(const std::string& cmd, const std::string& reason,
                                  const std::string& cls, const std::string& dir,
                                  const std::string& prefix)
{
    try {
        ordered_json j;
        j["command"] = cmd;
        j["status"] = "error";
        j["error_class"] = cls;
        j["reason"] = reason;
        emit_outputs(nullptr, nullptr, 0.0, j, dir, prefix);
    } catch (...) {
        // the caller is already on an error path; nothing useful left to do
    }
}

} // namespace kfp

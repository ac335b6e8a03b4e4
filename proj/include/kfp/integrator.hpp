#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/field.hpp"
#include "kfp/operators.hpp"

namespace kfp {

struct IntegratorConfig {
    double dt = 0.0;          // <= 0 selects cfl_max_dt
    double t_final = 100.0;
    double steady_tol = 1e-10;
    int record_every = 50;    // 0 records only the initial and final samples
    bool self_consistent = true;
    bool stop_at_steady = true;
    bool renormalize_initial = false;
};

struct TraceSample {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double l2w_distance = 0.0;
    double boundary_energy_flux = 0.0;
};

struct RunTrace {
    std::vector<TraceSample> samples;
};

inline void write_trace_csv(const RunTrace& trace, std::ostream& os)
{
    os << "t,mass,energy,l2w_distance,boundary_energy_flux\n";
    for (const auto& s : trace.samples)
        os << detail::fmt17(s.t) << ',' << detail::fmt17(s.mass) << ',' << detail::fmt17(s.energy)
           << ',' << detail::fmt17(s.l2w_distance) << ',' << detail::fmt17(s.boundary_energy_flux)
           << '\n';
}

/// Caches everything one Strang step needs. In self-consistent mode the
/// collision factorization is rebuilt each step from the lagged energy;
/// frozen mode keeps Lambda (and the factorization) fixed.
struct StepContext {
    ModelParams params;
    std::vector<double> tau;
    ThermostatCache thermostats;
    ResolvedBoundary boundary;
    std::optional<std::vector<double>> frozen_lambda;
    double dt = 0.0;
    CollisionWorkspace collision;
    bool collision_ready = false;
    std::vector<double> lambda_scratch;
};

inline StepContext make_step_context(const ModelParams& params, const PhaseSpaceGrid& grid,
                                     double dt,
                                     const std::vector<double>* frozen_lambda = nullptr)
{
    StepContext ctx;
    if (dt <= 0.0)
        throw ValidationError("step context: dt must be positive");
    if (dt > cfl_max_dt(grid))
        throw ValidationError("step context: dt exceeds the CFL bound 0.9 dx / v_max");
    ctx.params = params;
    ctx.tau = tau_cells(params.tau, grid);
    ctx.thermostats = build_thermostat_cache(params, grid);
    if (params.boundary.mode == BoundaryMode::maxwell)
        ctx.boundary = resolve_boundary(grid, params.boundary);
    ctx.dt = dt;
    if (frozen_lambda)
        ctx.frozen_lambda = *frozen_lambda;
    else if (params.alpha == 0.0)
        ctx.frozen_lambda = ctx.tau;  // linear problem, Lambda = tau
    if (ctx.frozen_lambda) {
        ctx.collision = build_collision_workspace(grid, *ctx.frozen_lambda, dt);
        ctx.collision_ready = true;
    }
    return ctx;
}

/// One Strang step: half transport, implicit Chang-Cooper collision solve,
/// exact BGK relaxation, half transport. Energy lagging: the nonlinear
/// diffusivity uses E_f at the start of the step.
inline void step(DistributionField& f, StepContext& ctx)
{
    const auto& g = f.grid;
    if (!ctx.frozen_lambda) {
        const double E = energy_functional(f);
        auto& lam = ctx.lambda_scratch;
        lam.resize(ctx.tau.size());
        for (std::size_t i = 0; i < ctx.tau.size(); ++i)
            lam[i] = ctx.params.alpha * E + (1.0 - ctx.params.alpha) * ctx.tau[i];
        ctx.collision = build_collision_workspace(g, lam, ctx.dt);
        ctx.collision_ready = true;
    }
    const auto mode = ctx.params.boundary.mode;
    const ResolvedBoundary* rb = mode == BoundaryMode::maxwell ? &ctx.boundary : nullptr;

    transport_step(f, 0.5 * ctx.dt, mode, rb);
    collision_solve(f, ctx.collision);
    bgk_relax(f, ctx.thermostats, ctx.dt);
    transport_step(f, 0.5 * ctx.dt, mode, rb);
}

struct RunResult {
    DistributionField field;
    RunTrace trace;
    int steps = 0;
    double t_end = 0.0;
    bool steady_reached = false;
    double final_residual = 0.0;
    double min_over_run = 0.0;
};

/// Integrates f0 until t_final or steady detection (residual
/// ||f(t+dt)-f(t)||_{L2_omega} / dt below steady_tol). Records the trace,
/// tracks the minimum value ever seen, and raises NumericalError on the
/// first non-finite sample.
inline RunResult run_transient(DistributionField f0, const ModelParams& params,
                               const IntegratorConfig& icfg,
                               const std::vector<double>* frozen_lambda = nullptr,
                               const DistributionField* reference = nullptr)
{
    const auto& g = f0.grid;
    const double dt = icfg.dt > 0.0 ? icfg.dt : cfl_max_dt(g);
    std::vector<double> tau_frozen;
    if (!icfg.self_consistent && !frozen_lambda) {
        tau_frozen = tau_cells(params.tau, g);  // frozen mode without an explicit profile
        frozen_lambda = &tau_frozen;
    }
    StepContext ctx = make_step_context(params, g, dt, frozen_lambda);

    RunResult rr;
    if (icfg.renormalize_initial) {
        const double m = mass(f0);
        if (!(m > 0.0))
            throw NumericalError("run_transient: initial mass is not positive");
        for (auto& x : f0.data) x /= m;
    }

    const auto om = weight_table(params.weight, g);
    const ResolvedBoundary* rb =
        params.boundary.mode == BoundaryMode::maxwell ? &ctx.boundary : nullptr;

    auto record = [&](const DistributionField& f, double t) {
        TraceSample s;
        s.t = t;
        s.mass = mass(f);
        s.energy = energy_functional(f);
        s.l2w_distance = reference ? weighted_distance_cached(f, *reference, om) : 0.0;
        s.boundary_energy_flux = rb ? boundary_energy_flux(f, *rb) : 0.0;
        rr.trace.samples.push_back(s);
    };

    rr.min_over_run = min_value(f0);
    record(f0, 0.0);

    const long max_steps = static_cast<long>(std::ceil(icfg.t_final / dt - 1e-9));
    DistributionField prev = f0;
    long last_recorded = 0;
    long k = 0;
    for (k = 1; k <= max_steps; ++k) {
        prev.data = f0.data;
        step(f0, ctx);
        if (!all_finite(f0))
            throw NumericalError("run_transient: non-finite value at step " + std::to_string(k) +
                                 ", t = " + std::to_string(k * dt));
        rr.min_over_run = std::min(rr.min_over_run, min_value(f0));
        rr.final_residual = weighted_distance_cached(f0, prev, om) / dt;
        if (icfg.record_every > 0 && k % icfg.record_every == 0) {
            record(f0, k * dt);
            last_recorded = k;
        }
        if (icfg.stop_at_steady && rr.final_residual <= icfg.steady_tol) {
            rr.steady_reached = true;
            break;
        }
    }
    if (k > max_steps) k = max_steps;
    if (k != last_recorded)
        record(f0, k * dt);
    rr.steps = static_cast<int>(k);
    rr.t_end = k * dt;
    rr.field = std::move(f0);
    return rr;
}

} // namespace kfp

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kfp/analysis.hpp"
#include "kfp/errors.hpp"
#include "kfp/integrator.hpp"

namespace kfp {

struct SteadyResult {
    DistributionField field;
    double energy = 0.0;
    int steps = 0;
    double residual = 0.0;
    RunTrace trace;
};

inline double tau_mean(const std::vector<double>& tau)
{
    double s = 0.0;
    for (double t : tau) s += t;
    return s / static_cast<double>(tau.size());
}

/// Steady state of the linear equation with a frozen diffusivity profile,
/// reached by time marching from a global Maxwellian at the mean tau.
/// The returned state is renormalized to unit mass.
inline SteadyResult linear_steady(const ModelParams& params, const PhaseSpaceGrid& grid,
                                  const IntegratorConfig& icfg,
                                  const std::vector<double>& lambda_cells)
{
    const double T0 = tau_mean(tau_cells(params.tau, grid));
    DistributionField f0 = project_maxwellian(grid, 1.0, T0);
    IntegratorConfig cfg = icfg;
    cfg.self_consistent = false;
    cfg.stop_at_steady = true;
    RunResult rr = run_transient(std::move(f0), params, cfg, &lambda_cells);
    if (!rr.steady_reached)
        throw ConvergenceError("linear_steady: no steady state within t_final = " +
                               std::to_string(cfg.t_final) + " (residual " +
                               std::to_string(rr.final_residual) + ")");
    const double m = mass(rr.field);
    for (auto& x : rr.field.data) x /= m;
    SteadyResult sr;
    sr.energy = energy_functional(rr.field);
    sr.steps = rr.steps;
    sr.residual = rr.final_residual;
    sr.trace = std::move(rr.trace);
    sr.field = std::move(rr.field);
    return sr;
}

/// One evaluation of the fixed-point map: freeze Lambda(x) = alpha nu +
/// (1-alpha) tau(x), relax to the linear steady state, report its energy.
inline SteadyResult map_F(const ModelParams& params, const PhaseSpaceGrid& grid,
                          const IntegratorConfig& icfg, double nu)
{
    if (!(nu >= 0.0))
        throw ValidationError("map_F: nu must be nonnegative");
    std::vector<double> lam = tau_cells(params.tau, grid);
    for (auto& l : lam) l = params.alpha * nu + (1.0 - params.alpha) * l;
    return linear_steady(params, grid, icfg, lam);
}

struct FixedPointOptions {
    double theta = 0.5;           // damping of the Picard update
    double tol_fp = 1e-4;         // relative fixed-point tolerance
    int max_outer = 30;
    double alpha_budget = 0.1;    // regime flag threshold
    double interval_margin = 0.2; // guard band beyond [0, 2 E0]
};

struct FixedPointResult {
    double nu_star = 0.0;
    double energy = 0.0;
    double E0 = 0.0;        // energy of the alpha-frozen-at-tau steady state
    double residual = 0.0;
    int iterations = 0;
    bool within_regime = false;
    bool used_bisection = false;
    std::vector<std::array<double, 2>> history;  // (nu, F(nu)) per outer iteration
    DistributionField ness;
    RunTrace trace;  // transient of the converged map evaluation
};

/// Self-consistent steady state via damped Picard iteration on the energy,
/// nu_{k+1} = (1-theta) nu_k + theta F(nu_k), seeded at E0 = F(tau profile).
/// Once g(nu) = F(nu) - nu changes sign across the visited points the update
/// switches to bisection on the bracket. Leaving [0, 2 E0 (1+margin)] aborts:
/// the contraction argument behind the construction has failed.
inline FixedPointResult fixed_point_ness(const ModelParams& params, const PhaseSpaceGrid& grid,
                                         const IntegratorConfig& icfg,
                                         const FixedPointOptions& opts = {})
{
    FixedPointResult res;
    res.within_regime = params.alpha <= opts.alpha_budget;

    SteadyResult base = linear_steady(params, grid, icfg, tau_cells(params.tau, grid));
    res.E0 = base.energy;
    const double guard = 2.0 * res.E0 * (1.0 + opts.interval_margin);

    double nu = res.E0;
    double lo_nu = 0.0, hi_nu = 0.0;
    bool have_lo = false, have_hi = false;
    for (int it = 1; it <= opts.max_outer; ++it) {
        SteadyResult steady = map_F(params, grid, icfg, nu);
        const double F = steady.energy;
        res.history.push_back({nu, F});
        res.iterations = it;
        if (!(F >= 0.0) || F > guard)
            throw ConvergenceError("fixed_point_ness: map left [0, " + std::to_string(guard) +
                                   "] at iteration " + std::to_string(it) +
                                   "; alpha is outside the contraction regime");
        const double g = F - nu;
        res.residual = std::abs(g) / std::max(1.0, std::abs(nu));
        if (res.residual <= opts.tol_fp) {
            res.nu_star = nu;
            res.energy = F;
            res.ness = std::move(steady.field);
            res.trace = std::move(steady.trace);
            return res;
        }
        if (g > 0.0) {
            lo_nu = have_lo ? std::max(lo_nu, nu) : nu;
            have_lo = true;
        } else {
            hi_nu = have_hi ? std::min(hi_nu, nu) : nu;
            have_hi = true;
        }
        if (have_lo && have_hi) {
            nu = 0.5 * (lo_nu + hi_nu);
            res.used_bisection = true;
        } else {
            nu = (1.0 - opts.theta) * nu + opts.theta * F;
        }
    }
    throw ConvergenceError("fixed_point_ness: no convergence in " +
                           std::to_string(opts.max_outer) + " outer iterations (residual " +
                           std::to_string(res.residual) + ")");
}

struct StabilityOptions {
    double amplitude = 1e-3;
    double t_hot = 0.0;   // <= 0 selects 1.5 x the base temperature scale
    double t_cold = 0.0;  // <= 0 selects 0.75 x the base temperature scale
    double t_final = 10.0;
    int record_every = 10;
    double fit_floor = 0.0;  // <= 0 selects the smallest recorded distance
};

struct StabilityResult {
    RunTrace trace;
    DecayFitResult fit;
    double initial_distance = 0.0;
    DistributionField field;
};

/// Perturbs a steady state by a mass-free bump (difference of a hot and a
/// cold Maxwellian), integrates back, and fits the decay rate of the
/// weighted L2 distance to the unperturbed state.
inline StabilityResult stability_experiment(const ModelParams& params,
                                            const DistributionField& base,
                                            const IntegratorConfig& icfg,
                                            const StabilityOptions& opts = {})
{
    const auto& g = base.grid;
    const double m0 = mass(base);
    if (!(m0 > 0.0))
        throw ValidationError("stability_experiment: base state has nonpositive mass");
    const double T_ref = energy_functional(base) / m0;
    const double t_hot = opts.t_hot > 0.0 ? opts.t_hot : 1.5 * T_ref;
    const double t_cold = opts.t_cold > 0.0 ? opts.t_cold : 0.75 * T_ref;
    DistributionField hot = project_maxwellian(g, 1.0, t_hot);
    DistributionField cold = project_maxwellian(g, 1.0, t_cold);

    DistributionField f0 = base;
    for (std::size_t i = 0; i < f0.data.size(); ++i)
        f0.data[i] = std::max(0.0, f0.data[i] + opts.amplitude * (hot.data[i] - cold.data[i]));
    const double m = mass(f0);
    if (!(m > 0.0))
        throw NumericalError("stability_experiment: perturbed state lost all mass");
    for (auto& x : f0.data) x *= m0 / m;

    IntegratorConfig cfg = icfg;
    cfg.t_final = opts.t_final;
    cfg.record_every = opts.record_every;
    cfg.self_consistent = params.alpha > 0.0;
    cfg.stop_at_steady = true;
    RunResult rr = run_transient(std::move(f0), params, cfg, nullptr, &base);

    StabilityResult sr;
    sr.initial_distance = rr.trace.samples.front().l2w_distance;
    std::vector<double> ts, ds;
    for (const auto& s : rr.trace.samples) {
        ts.push_back(s.t);
        ds.push_back(s.l2w_distance);
    }
    double floor = opts.fit_floor;
    if (floor <= 0.0) {
        floor = ds.empty() ? 0.0 : ds.front();
        for (double d : ds)
            if (d > 0.0) floor = std::min(floor, d);
    }
    sr.fit = decay_fit(ts, ds, floor);
    sr.trace = std::move(rr.trace);
    sr.field = std::move(rr.field);
    return sr;
}

} // namespace kfp

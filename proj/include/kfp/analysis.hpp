#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/integrator.hpp"
#include "kfp/operators.hpp"
#include "kfp/quadrature.hpp"

namespace kfp {

// ---------------------------------------------------------------------------
// Closed forms for the spatially homogeneous problem
// ---------------------------------------------------------------------------

/// Steady energy of the homogeneous equation with frozen diffusivity lambda
/// and a single global thermostat (eta, T): (2 lambda + eta T) / (eta + 2).
inline double homogeneous_energy_closed(double lambda, double eta, double T)
{
    return (2.0 * lambda + eta * T) / (eta + 2.0);
}

/// Self-consistent fixed-point energy for constant tau and a single global
/// thermostat: nu* = (2 (1-alpha) tau + eta T) / (eta + 2 - 2 alpha).
inline double nu_star_closed(double tau, double eta, double T, double alpha)
{
    return (2.0 * (1.0 - alpha) * tau + eta * T) / (eta + 2.0 - 2.0 * alpha);
}

// ---------------------------------------------------------------------------
// Independent steady-state oracle via the radial Fourier transform
// ---------------------------------------------------------------------------

/// Fourier transform of the homogeneous steady state at radial frequency r,
/// for diffusivity lambda and one thermostat (eta, T). Derived by solving the
/// transformed steady equation along characteristics; the substitution
/// w = u^eta turns the inner integral into a smooth one on [0, 1], which
/// keeps the quadrature well behaved for both tiny and huge eta.
inline double homogeneous_fhat(double r, double lambda, double eta, double T)
{
    if (eta <= 0.0)
        return std::exp(-0.5 * lambda * r * r);
    const double a = 0.5 * (lambda - T);
    const double inner = integrate(
        [&](double w) { return std::exp(a * r * r * std::pow(w, 2.0 / eta)); }, 0.0, 1.0, 1e-13);
    return std::exp(-0.5 * lambda * r * r) * inner;
}

/// Steady energy recovered from the transform through
/// E(r) = 2 (1 - fhat(r)) / r^2 -> E as r -> 0, accelerated by one
/// Richardson pass in r^2. Exists as an oracle independent of both the
/// closed form and the velocity-space discretization.
inline double homogeneous_energy_oracle(double lambda, double eta, double T)
{
    auto E_of = [&](double r) { return 2.0 * (1.0 - homogeneous_fhat(r, lambda, eta, T)) / (r * r); };
    const double r = 1e-3;
    const double e1 = E_of(r);
    const double e2 = E_of(0.5 * r);
    return (4.0 * e2 - e1) / 3.0;
}

// ---------------------------------------------------------------------------
// Exponential decay fit
// ---------------------------------------------------------------------------

enum class DecayFitStatus { ok, no_decay_signal, window_too_short };

struct DecayFitResult {
    DecayFitStatus status = DecayFitStatus::no_decay_signal;
    double rate = 0.0;
    double intercept = 0.0;  // fitted log-distance at t = 0
    double r_squared = 0.0;
    double efolds = 0.0;     // ln(max/min) inside the fit window
    int n_window = 0;
    double t_a = 0.0;        // fit window bounds in time
    double t_b = 0.0;
};

inline const char* to_string(DecayFitStatus s)
{
    switch (s) {
        case DecayFitStatus::ok: return "ok";
        case DecayFitStatus::no_decay_signal: return "no_decay_signal";
        default: return "window_too_short";
    }
}

/// Fits log d ~ c - rate * t on the window 10*floor <= d <= max(d)/2, which
/// trims both the initial transient and the saturation tail. Needs at least
/// ten samples spanning one e-fold inside the window to report a rate.
inline DecayFitResult decay_fit(const std::vector<double>& ts, const std::vector<double>& ds,
                                double floor)
{
    if (ts.size() != ds.size())
        throw ValidationError("decay_fit: times and distances differ in length");
    DecayFitResult res;
    double dmax = 0.0;
    for (double d : ds) dmax = std::max(dmax, d);
    const double lo = 10.0 * std::max(floor, 0.0);
    const double hi = 0.5 * dmax;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds[i] > 0.0 && ds[i] >= lo && ds[i] <= hi) {
            xs.push_back(ts[i]);
            ys.push_back(std::log(ds[i]));
        }
    res.n_window = static_cast<int>(xs.size());
    if (xs.empty()) {
        res.status = DecayFitStatus::no_decay_signal;
        return res;
    }
    res.t_a = *std::min_element(xs.begin(), xs.end());
    res.t_b = *std::max_element(xs.begin(), xs.end());
    const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
    res.efolds = *ymax - *ymin;
    if (res.n_window < 10 || res.efolds < 1.0) {
        res.status = DecayFitStatus::window_too_short;
        return res;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) {
        res.status = DecayFitStatus::window_too_short;
        return res;
    }
    const double slope = (n * sxy - sx * sy) / denom;
    res.rate = -slope;
    res.intercept = (sy - slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    const double ss_res = ss_tot - slope * (sxy - sx * sy / n);
    res.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    res.status = res.rate > 0.0 ? DecayFitStatus::ok : DecayFitStatus::no_decay_signal;
    return res;
}

// ---------------------------------------------------------------------------
// Discrete energy budget
// ---------------------------------------------------------------------------

struct MomentBalance {
    double fp_term = 0.0;        // Fokker-Planck contribution to dE/dt
    double bgk_term = 0.0;       // thermostat contribution
    double boundary_term = 0.0;  // diffusive wall exchange
    double mechanism_sum = 0.0;
    double fd_dEdt = 0.0;        // (E(t+dt) - E(t)) / dt from one integrator step
    double defect = 0.0;
};

/// Splits dE/dt into the per-mechanism discrete contributions evaluated on
/// the current state and compares against a finite difference across one
/// integrator step. The defect measures the splitting error, O(dt).
inline MomentBalance moment_balance_check(const DistributionField& f, const ModelParams& params,
                                          double dt)
{
    const auto& g = f.grid;
    MomentBalance mb;
    std::vector<double> lam = tau_cells(params.tau, g);
    if (params.alpha > 0.0) {
        const double E = energy_functional(f);
        for (auto& l : lam) l = params.alpha * E + (1.0 - params.alpha) * l;
    }
    DistributionField cf = fp_apply(f, lam);
    mb.fp_term = energy_functional(cf);
    ThermostatCache tc = build_thermostat_cache(params, g);
    DistributionField gf = bgk_apply(f, tc);
    mb.bgk_term = energy_functional(gf);
    if (params.boundary.mode == BoundaryMode::maxwell) {
        ResolvedBoundary rb = resolve_boundary(g, params.boundary);
        mb.boundary_term = wall_energy_exchange(f, rb);
    }
    mb.mechanism_sum = mb.fp_term + mb.bgk_term + mb.boundary_term;

    StepContext ctx = make_step_context(params, g, dt);
    DistributionField fn = f;
    step(fn, ctx);
    mb.fd_dEdt = (energy_functional(fn) - energy_functional(f)) / dt;
    mb.defect = std::abs(mb.mechanism_sum - mb.fd_dEdt);
    return mb;
}

} // namespace kfp

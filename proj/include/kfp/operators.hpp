#pragma once

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/field.hpp"
#include "kfp/grid.hpp"
#include "kfp/model.hpp"

namespace kfp {

// ---------------------------------------------------------------------------
// Maxwell boundary data
// ---------------------------------------------------------------------------

/// Trace flux values gamma f * |n.v| * dv^d per boundary face and velocity
/// node. An outgoing flux populates nodes with n.v > 0, an incoming one the
/// mirrored half; the other entries stay zero.
struct BoundaryFlux {
    int n_faces = 0;
    int n_vnodes = 0;
    std::vector<double> data;

    BoundaryFlux() = default;
    BoundaryFlux(int faces, int vnodes)
        : n_faces(faces), n_vnodes(vnodes),
          data(static_cast<std::size_t>(faces) * vnodes, 0.0)
    {
    }
    double& at(int face, int j)
    {
        return data[static_cast<std::size_t>(face) * n_vnodes + j];
    }
    double at(int face, int j) const
    {
        return data[static_cast<std::size_t>(face) * n_vnodes + j];
    }
};

/// Per-face reflection data: accommodation, wall temperature, and the
/// discretely renormalized diffusive kernel. Renormalization makes the
/// discrete incoming mass flux of each kernel exactly one; the deviation of
/// the raw midpoint quadrature from one is kept as run metadata.
struct ResolvedBoundary {
    std::vector<double> iota;
    std::vector<double> theta;
    std::vector<std::vector<double>> kernel;  // per face, zero off the incoming half
    std::vector<double> kernel_energy;        // sum of |v|^2 * kernel over incoming nodes
    std::vector<double> raw_flux;             // analytic-kernel flux before renormalization
    double max_flux_deviation = 0.0;
};

inline ResolvedBoundary resolve_boundary(const PhaseSpaceGrid& g, const BoundarySpec& spec)
{
    ResolvedBoundary rb;
    const int nf = static_cast<int>(g.faces.size());
    rb.iota.resize(static_cast<std::size_t>(nf), 0.0);
    rb.theta.resize(static_cast<std::size_t>(nf), 0.0);
    rb.kernel.resize(static_cast<std::size_t>(nf));
    rb.kernel_energy.resize(static_cast<std::size_t>(nf), 0.0);
    rb.raw_flux.resize(static_cast<std::size_t>(nf), 0.0);

    for (int F = 0; F < nf; ++F) {
        const auto& face = g.faces[static_cast<std::size_t>(F)];
        const double io = spec.iota(face.side);
        rb.iota[static_cast<std::size_t>(F)] = io;
        if (io <= 0.0)
            continue;
        const double th = spec.theta(face.side);
        rb.theta[static_cast<std::size_t>(F)] = th;

        auto& K = rb.kernel[static_cast<std::size_t>(F)];
        K.assign(static_cast<std::size_t>(g.n_vnodes), 0.0);
        double flux = 0.0;
        for (int j = 0; j < g.n_vnodes; ++j) {
            const double w = g.vcomp(j, face.axis);
            if (face.sign * w >= 0.0)
                continue;  // outgoing half
            const double val =
                wall_maxwellian_vsq(th, g.vsq[static_cast<std::size_t>(j)], g.d) * std::abs(w) *
                g.v_measure();
            K[static_cast<std::size_t>(j)] = val;
            flux += val;
        }
        rb.raw_flux[static_cast<std::size_t>(F)] = flux;
        rb.max_flux_deviation = std::max(rb.max_flux_deviation, std::abs(flux - 1.0));
        double esum = 0.0;
        for (int j = 0; j < g.n_vnodes; ++j) {
            K[static_cast<std::size_t>(j)] /= flux;
            esum += g.vsq[static_cast<std::size_t>(j)] * K[static_cast<std::size_t>(j)];
        }
        rb.kernel_energy[static_cast<std::size_t>(F)] = esum;
    }
    return rb;
}

/// Outgoing trace fluxes of f at every boundary face, first-order trace
/// (adjacent cell value).
inline BoundaryFlux collect_outgoing(const DistributionField& f)
{
    const auto& g = f.grid;
    BoundaryFlux out(static_cast<int>(g.faces.size()), g.n_vnodes);
    for (int F = 0; F < out.n_faces; ++F) {
        const auto& face = g.faces[static_cast<std::size_t>(F)];
        for (int j = 0; j < g.n_vnodes; ++j) {
            const double w = g.vcomp(j, face.axis);
            if (face.sign * w > 0.0)
                out.at(F, j) = f.at(face.cell, j) * std::abs(w) * g.v_measure();
        }
    }
    return out;
}

/// Maxwell reflection: incoming = (1 - iota) * specular mirror + iota *
/// (outgoing mass flux) * renormalized wall kernel. With iota = 0 this is the
/// exact index permutation, an involution on the flux data.
inline BoundaryFlux apply_maxwell_boundary(const PhaseSpaceGrid& g, const ResolvedBoundary& rb,
                                           const BoundaryFlux& out)
{
    BoundaryFlux in(out.n_faces, out.n_vnodes);
    for (int F = 0; F < out.n_faces; ++F) {
        const auto& face = g.faces[static_cast<std::size_t>(F)];
        const double io = rb.iota[static_cast<std::size_t>(F)];
        double phi = 0.0;
        if (io > 0.0)
            for (int j = 0; j < g.n_vnodes; ++j) phi += out.at(F, j);
        const auto& K = rb.kernel[static_cast<std::size_t>(F)];
        for (int j = 0; j < g.n_vnodes; ++j) {
            double v = (1.0 - io) * out.at(F, g.mirror_vnode(j, face.axis));
            if (io > 0.0)
                v += io * phi * K[static_cast<std::size_t>(j)];
            in.at(F, j) = v;
        }
    }
    return in;
}

// ---------------------------------------------------------------------------
// Transport: first-order upwind, dimension-split in d = 2
// ---------------------------------------------------------------------------

/// Largest stable step for the upwind sweeps, 0.9 * dx / v_max.
inline double cfl_max_dt(const PhaseSpaceGrid& g)
{
    return 0.9 * g.dx / g.v_max;
}

namespace detail {

/// One upwind sweep along `axis`. Reads from `old_data`, writes into f.
inline void transport_sweep(DistributionField& f, const std::vector<double>& old_data, double dt,
                            int axis, BoundaryMode mode, const ResolvedBoundary* rb)
{
    const auto& g = f.grid;
    const int N = g.Nx;
    const int nv = g.n_vnodes;
    const double r = dt / g.dx;

    BoundaryFlux in;
    if (mode == BoundaryMode::maxwell) {
        BoundaryFlux out(static_cast<int>(g.faces.size()), nv);
        for (int F = 0; F < out.n_faces; ++F) {
            const auto& face = g.faces[static_cast<std::size_t>(F)];
            if (face.axis != axis)
                continue;
            for (int j = 0; j < nv; ++j) {
                const double w = g.vcomp(j, axis);
                if (face.sign * w > 0.0)
                    out.at(F, j) =
                        old_data[static_cast<std::size_t>(face.cell) * nv + j] * std::abs(w) *
                        g.v_measure();
            }
        }
        in = apply_maxwell_boundary(g, *rb, out);
    }

    // Face index of the low/high side of this axis for a given line. In d=1
    // the lines collapse to the single spatial line; in d=2 the transverse
    // cell coordinate identifies the face along the side.
    const int n_lines = g.d == 1 ? 1 : N;
    for (int line = 0; line < n_lines; ++line) {
        int face_lo = 0, face_hi = 0;
        if (g.d == 1) {
            face_lo = 0;
            face_hi = 1;
        } else if (axis == 0) {
            face_lo = line;          // side x=0, transverse index iy = line
            face_hi = N + line;      // side x=1
        } else {
            face_lo = 2 * N + line;  // side y=0, transverse index ix = line
            face_hi = 3 * N + line;  // side y=1
        }

        auto cell_at = [&](int i) {
            if (g.d == 1) return i;
            return axis == 0 ? g.cell_index(i, line) : g.cell_index(line, i);
        };

        for (int j = 0; j < nv; ++j) {
            const double w = g.vcomp(j, axis);
            const double c = std::abs(w) * r;
            if (w > 0.0) {
                for (int i = 0; i < N; ++i) {
                    const std::size_t me = static_cast<std::size_t>(cell_at(i)) * nv + j;
                    double inflow;
                    if (i > 0)
                        inflow = c * old_data[static_cast<std::size_t>(cell_at(i - 1)) * nv + j];
                    else if (mode == BoundaryMode::periodic)
                        inflow = c * old_data[static_cast<std::size_t>(cell_at(N - 1)) * nv + j];
                    else
                        inflow = r * in.at(face_lo, j) / g.v_measure();
                    f.data[me] = old_data[me] - c * old_data[me] + inflow;
                }
            } else {
                for (int i = 0; i < N; ++i) {
                    const std::size_t me = static_cast<std::size_t>(cell_at(i)) * nv + j;
                    double inflow;
                    if (i < N - 1)
                        inflow = c * old_data[static_cast<std::size_t>(cell_at(i + 1)) * nv + j];
                    else if (mode == BoundaryMode::periodic)
                        inflow = c * old_data[static_cast<std::size_t>(cell_at(0)) * nv + j];
                    else
                        inflow = r * in.at(face_hi, j) / g.v_measure();
                    f.data[me] = old_data[me] - c * old_data[me] + inflow;
                }
            }
        }
    }
}

} // namespace detail

/// Free transport over dt with the configured reflection; rb may be null in
/// periodic mode. Positivity requires dt <= cfl_max_dt.
inline void transport_step(DistributionField& f, double dt, BoundaryMode mode,
                           const ResolvedBoundary* rb = nullptr)
{
    if (mode == BoundaryMode::maxwell && rb == nullptr)
        throw ValidationError("transport_step: maxwell mode needs resolved boundary data");
    if (dt > cfl_max_dt(f.grid))
        throw ValidationError("transport_step: dt exceeds the CFL bound 0.9 dx / v_max");
    std::vector<double> old_data = f.data;
    detail::transport_sweep(f, old_data, dt, 0, mode, rb);
    if (f.grid.d == 2) {
        old_data = f.data;
        detail::transport_sweep(f, old_data, dt, 1, mode, rb);
    }
}

// ---------------------------------------------------------------------------
// Fokker-Planck collisions, Chang-Cooper fluxes
// ---------------------------------------------------------------------------

/// Chang-Cooper interpolation weight for face Peclet number w = v dv / Lambda.
/// Solves delta so that the discrete flux vanishes exactly on the Gaussian
/// with ratio e^{-w} across the face; limits are 1/2 (centered) and the
/// upwind weights 0/1 for strong drift.
inline double cc_delta(double w)
{
    if (std::abs(w) < 1e-10) return 0.5 - w / 12.0;
    if (w > 500.0) return 1.0 / w;
    if (w < -500.0) return 1.0 / w + 1.0;
    return 1.0 / w - 1.0 / std::expm1(w);
}

namespace detail {

/// Face coefficients of the 1D operator d/dv(Lambda d/dv + v): the flux at
/// interior face k (between nodes k-1 and k, at velocity vf) is
/// F_k = a[k] f_k + b[k] f_{k-1}; boundary faces carry zero flux.
inline void cc_face_coeffs(const PhaseSpaceGrid& g, double lambda, std::vector<double>& a,
                           std::vector<double>& b, std::vector<double>* delta = nullptr)
{
    const int Nv = g.Nv;
    a.assign(static_cast<std::size_t>(Nv) + 1, 0.0);
    b.assign(static_cast<std::size_t>(Nv) + 1, 0.0);
    if (delta) delta->assign(static_cast<std::size_t>(Nv) + 1, 0.0);
    for (int k = 1; k < Nv; ++k) {
        const double vf = -g.v_max + k * g.dv;
        const double w = vf * g.dv / lambda;
        const double de = cc_delta(w);
        a[static_cast<std::size_t>(k)] = lambda / g.dv + vf * (1.0 - de);
        b[static_cast<std::size_t>(k)] = -lambda / g.dv + vf * de;
        if (delta) (*delta)[static_cast<std::size_t>(k)] = de;
    }
}

} // namespace detail

/// C_Lambda f = Lambda Lap_v f + Div_v(v f) in flux form, per-axis sum in
/// d = 2. Zero-flux closure at the velocity box edges.
inline DistributionField fp_apply(const DistributionField& f, const std::vector<double>& lambda)
{
    const auto& g = f.grid;
    if (lambda.size() != static_cast<std::size_t>(g.n_cells))
        throw ValidationError("fp_apply: lambda must hold one value per cell");
    DistributionField out(g);
    std::vector<double> a, b;
    const int Nv = g.Nv;

    for (int i = 0; i < g.n_cells; ++i) {
        detail::cc_face_coeffs(g, lambda[static_cast<std::size_t>(i)], a, b);
        const double* fi = f.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        double* oi = out.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        if (g.d == 1) {
            for (int j = 0; j < Nv; ++j) {
                const double Fhi = j + 1 < Nv
                                       ? a[static_cast<std::size_t>(j) + 1] * fi[j + 1] +
                                             b[static_cast<std::size_t>(j) + 1] * fi[j]
                                       : 0.0;
                const double Flo = j > 0 ? a[static_cast<std::size_t>(j)] * fi[j] +
                                               b[static_cast<std::size_t>(j)] * fi[j - 1]
                                         : 0.0;
                oi[j] = (Fhi - Flo) / g.dv;
            }
        } else {
            for (int jx = 0; jx < Nv; ++jx) {
                for (int jy = 0; jy < Nv; ++jy) {
                    const int j = jx * Nv + jy;
                    double acc = 0.0;
                    // axis 0 fluxes couple (jx-1, jx, jx+1) at fixed jy
                    {
                        const double Fhi =
                            jx + 1 < Nv ? a[static_cast<std::size_t>(jx) + 1] * fi[(jx + 1) * Nv + jy] +
                                              b[static_cast<std::size_t>(jx) + 1] * fi[j]
                                        : 0.0;
                        const double Flo = jx > 0 ? a[static_cast<std::size_t>(jx)] * fi[j] +
                                                        b[static_cast<std::size_t>(jx)] *
                                                            fi[(jx - 1) * Nv + jy]
                                                  : 0.0;
                        acc += (Fhi - Flo) / g.dv;
                    }
                    // axis 1 fluxes couple (jy-1, jy, jy+1) at fixed jx
                    {
                        const double Fhi =
                            jy + 1 < Nv ? a[static_cast<std::size_t>(jy) + 1] * fi[jx * Nv + jy + 1] +
                                              b[static_cast<std::size_t>(jy) + 1] * fi[j]
                                        : 0.0;
                        const double Flo = jy > 0 ? a[static_cast<std::size_t>(jy)] * fi[j] +
                                                        b[static_cast<std::size_t>(jy)] *
                                                            fi[jx * Nv + jy - 1]
                                                  : 0.0;
                        acc += (Fhi - Flo) / g.dv;
                    }
                    oi[j] = acc;
                }
            }
        }
    }
    return out;
}

/// Prefactored tridiagonal solves of (I - dt C_Lambda) per spatial cell.
/// The same 1D factorization serves every velocity line and, in d = 2, both
/// alternating-direction sweeps. Matrix columns sum to one, so the implicit
/// solve conserves discrete mass exactly, and the M-matrix structure keeps
/// the solution nonnegative.
struct CollisionWorkspace {
    double dt = 0.0;
    int Nv = 0;
    std::vector<double> lambda;
    std::vector<double> delta;              // CC weights, (Nv+1) per cell, all in [0,1]
    std::vector<double> sub, cp, inv;       // Thomas factors, Nv per cell
};

inline CollisionWorkspace build_collision_workspace(const PhaseSpaceGrid& g,
                                                    const std::vector<double>& lambda, double dt)
{
    if (lambda.size() != static_cast<std::size_t>(g.n_cells))
        throw ValidationError("collision workspace: lambda must hold one value per cell");
    for (double l : lambda)
        if (!(l > 0.0))
            throw ValidationError("collision workspace: Lambda must be positive");

    CollisionWorkspace ws;
    ws.dt = dt;
    ws.Nv = g.Nv;
    ws.lambda = lambda;
    const int Nv = g.Nv;
    ws.delta.resize(static_cast<std::size_t>(g.n_cells) * (Nv + 1));
    ws.sub.resize(static_cast<std::size_t>(g.n_cells) * Nv);
    ws.cp.resize(static_cast<std::size_t>(g.n_cells) * Nv);
    ws.inv.resize(static_cast<std::size_t>(g.n_cells) * Nv);

    std::vector<double> a, b, de, dia(static_cast<std::size_t>(Nv)), sup(static_cast<std::size_t>(Nv));
    for (int i = 0; i < g.n_cells; ++i) {
        detail::cc_face_coeffs(g, lambda[static_cast<std::size_t>(i)], a, b, &de);
        std::memcpy(ws.delta.data() + static_cast<std::size_t>(i) * (Nv + 1), de.data(),
                    sizeof(double) * (Nv + 1));
        double* sub = ws.sub.data() + static_cast<std::size_t>(i) * Nv;
        double* cp = ws.cp.data() + static_cast<std::size_t>(i) * Nv;
        double* inv = ws.inv.data() + static_cast<std::size_t>(i) * Nv;
        for (int j = 0; j < Nv; ++j) {
            sub[j] = dt * b[static_cast<std::size_t>(j)] / g.dv;
            dia[static_cast<std::size_t>(j)] =
                1.0 - dt * (b[static_cast<std::size_t>(j) + 1] - a[static_cast<std::size_t>(j)]) / g.dv;
            sup[static_cast<std::size_t>(j)] = -dt * a[static_cast<std::size_t>(j) + 1] / g.dv;
        }
        double w = dia[0];
        cp[0] = sup[0] / w;
        inv[0] = 1.0 / w;
        for (int j = 1; j < Nv; ++j) {
            w = dia[static_cast<std::size_t>(j)] - sub[j] * cp[j - 1];
            cp[j] = sup[static_cast<std::size_t>(j)] / w;
            inv[j] = 1.0 / w;
        }
    }
    return ws;
}

namespace detail {

/// Solves one tridiagonal line in place; x may be strided.
inline void thomas_line(const double* sub, const double* cp, const double* inv, double* x,
                        int n, int stride)
{
    x[0] *= inv[0];
    for (int j = 1; j < n; ++j)
        x[static_cast<std::ptrdiff_t>(j) * stride] =
            (x[static_cast<std::ptrdiff_t>(j) * stride] -
             sub[j] * x[static_cast<std::ptrdiff_t>(j - 1) * stride]) *
            inv[j];
    for (int j = n - 2; j >= 0; --j)
        x[static_cast<std::ptrdiff_t>(j) * stride] -=
            cp[j] * x[static_cast<std::ptrdiff_t>(j + 1) * stride];
}

} // namespace detail

/// Implicit collision update f <- (I - dt C_Lambda)^{-1} f, in place.
inline void collision_solve(DistributionField& f, const CollisionWorkspace& ws)
{
    const auto& g = f.grid;
    const int Nv = g.Nv;
    for (int i = 0; i < g.n_cells; ++i) {
        const double* sub = ws.sub.data() + static_cast<std::size_t>(i) * Nv;
        const double* cp = ws.cp.data() + static_cast<std::size_t>(i) * Nv;
        const double* inv = ws.inv.data() + static_cast<std::size_t>(i) * Nv;
        double* fi = f.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        if (g.d == 1) {
            detail::thomas_line(sub, cp, inv, fi, Nv, 1);
        } else {
            for (int jy = 0; jy < Nv; ++jy)
                detail::thomas_line(sub, cp, inv, fi + jy, Nv, Nv);
            for (int jx = 0; jx < Nv; ++jx)
                detail::thomas_line(sub, cp, inv, fi + static_cast<std::size_t>(jx) * Nv, Nv, 1);
        }
    }
}

// ---------------------------------------------------------------------------
// BGK thermostats
// ---------------------------------------------------------------------------

/// Per-cell thermostat data: total rate and the rate-weighted mixture of
/// discretely renormalized bath Maxwellians (each with discrete mass one, so
/// the relaxation conserves mass exactly).
struct ThermostatCache {
    std::vector<double> etabar;  // per cell
    std::vector<double> target;  // per cell x vnode, zero rows where etabar = 0
    double max_mass_deviation = 0.0;  // raw discrete Maxwellian mass error, metadata
};

inline ThermostatCache build_thermostat_cache(const ModelParams& p, const PhaseSpaceGrid& g)
{
    ThermostatCache c;
    c.etabar.assign(static_cast<std::size_t>(g.n_cells), 0.0);
    c.target.assign(static_cast<std::size_t>(g.n_cells) * g.n_vnodes, 0.0);

    std::vector<std::vector<double>> kernels;
    for (const auto& th : p.thermostats) {
        std::vector<double> M(static_cast<std::size_t>(g.n_vnodes));
        double z = 0.0;
        for (int j = 0; j < g.n_vnodes; ++j) {
            M[static_cast<std::size_t>(j)] =
                maxwellian_vsq(th.temperature, g.vsq[static_cast<std::size_t>(j)], g.d);
            z += M[static_cast<std::size_t>(j)];
        }
        z *= g.v_measure();
        c.max_mass_deviation = std::max(c.max_mass_deviation, std::abs(z - 1.0));
        for (auto& m : M) m /= z;
        kernels.push_back(std::move(M));
    }

    for (int i = 0; i < g.n_cells; ++i) {
        const auto x = g.cell_center(i);
        double* row = c.target.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        for (std::size_t n = 0; n < p.thermostats.size(); ++n) {
            const auto& th = p.thermostats[n];
            if (!th.contains(x, g.d) || th.eta <= 0.0)
                continue;
            c.etabar[static_cast<std::size_t>(i)] += th.eta;
            for (int j = 0; j < g.n_vnodes; ++j)
                row[j] += th.eta * kernels[n][static_cast<std::size_t>(j)];
        }
        if (c.etabar[static_cast<std::size_t>(i)] > 0.0)
            for (int j = 0; j < g.n_vnodes; ++j)
                row[j] /= c.etabar[static_cast<std::size_t>(i)];
    }
    return c;
}

/// Operator value G f = sum_n eta_n 1_{Omega_n} (rho_f M_n - f).
inline DistributionField bgk_apply(const DistributionField& f, const ThermostatCache& c)
{
    const auto& g = f.grid;
    DistributionField out(g);
    const auto rho = density(f);
    for (int i = 0; i < g.n_cells; ++i) {
        const double eta = c.etabar[static_cast<std::size_t>(i)];
        if (eta <= 0.0)
            continue;
        const double* fi = f.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        const double* tg = c.target.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        double* oi = out.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        for (int j = 0; j < g.n_vnodes; ++j)
            oi[j] = eta * (rho[static_cast<std::size_t>(i)] * tg[j] - fi[j]);
    }
    return out;
}

/// Exact-in-time BGK relaxation over dt: density is invariant under G, so
/// per cell f -> e^{-eta dt} f + (1 - e^{-eta dt}) rho * target.
inline void bgk_relax(DistributionField& f, const ThermostatCache& c, double dt)
{
    const auto& g = f.grid;
    const auto rho = density(f);
    for (int i = 0; i < g.n_cells; ++i) {
        const double eta = c.etabar[static_cast<std::size_t>(i)];
        if (eta <= 0.0)
            continue;
        const double decay = std::exp(-eta * dt);
        const double gain = (1.0 - decay) * rho[static_cast<std::size_t>(i)];
        double* fi = f.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        const double* tg = c.target.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        for (int j = 0; j < g.n_vnodes; ++j)
            fi[j] = decay * fi[j] + gain * tg[j];
    }
}

// ---------------------------------------------------------------------------
// Boundary energy diagnostics
// ---------------------------------------------------------------------------

/// Boundary energy diagnostic
///   sum over faces of iota int |v|^2 gamma+ f (-|v|^2 + c(Theta)) (n.v)+ dv,
/// with c(Theta) = ((d+1)/2) sqrt(2/pi) Theta^{3/2}. Negative values mean the
/// walls currently drain energy from the outgoing trace.
inline double boundary_energy_flux(const DistributionField& f, const ResolvedBoundary& rb)
{
    const auto& g = f.grid;
    double total = 0.0;
    for (std::size_t F = 0; F < g.faces.size(); ++F) {
        const double io = rb.iota[F];
        if (io <= 0.0)
            continue;
        const auto& face = g.faces[F];
        const double th = rb.theta[F];
        const double coef =
            0.5 * (g.d + 1) * std::sqrt(2.0 / std::numbers::pi) * th * std::sqrt(th);
        double acc = 0.0;
        for (int j = 0; j < g.n_vnodes; ++j) {
            const double w = g.vcomp(j, face.axis);
            if (face.sign * w <= 0.0)
                continue;
            const double vsq = g.vsq[static_cast<std::size_t>(j)];
            acc += vsq * f.at(face.cell, j) * (coef - vsq) * std::abs(w);
        }
        total += io * acc * g.v_measure() * g.face_area();
    }
    return total;
}

/// Exact discrete wall contribution to dE_f/dt: (incoming minus outgoing)
/// second-moment flux through every face, divided by d. Specular parts cancel
/// identically; only accommodated faces contribute.
inline double wall_energy_exchange(const DistributionField& f, const ResolvedBoundary& rb)
{
    const auto& g = f.grid;
    const auto out = collect_outgoing(f);
    double total = 0.0;
    for (int F = 0; F < out.n_faces; ++F) {
        const double io = rb.iota[static_cast<std::size_t>(F)];
        if (io <= 0.0)
            continue;
        double phi = 0.0, eout = 0.0;
        for (int j = 0; j < g.n_vnodes; ++j) {
            phi += out.at(F, j);
            eout += g.vsq[static_cast<std::size_t>(j)] * out.at(F, j);
        }
        total += io * (phi * rb.kernel_energy[static_cast<std::size_t>(F)] - eout) * g.face_area();
    }
    return total / g.d;
}

} // namespace kfp

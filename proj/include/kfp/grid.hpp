#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/model.hpp"

namespace kfp {

/// One boundary face of the spatial box, with its outward normal.
struct BoundaryFace {
    int side;  // index into the side order {x=0, x=1, y=0, y=1}
    int axis;  // normal axis
    int sign;  // +1 when the outward normal points toward +axis
    int cell;  // adjacent interior cell
};

/// Cell-centered tensor grid over (0,1)^d x [-v_max, v_max]^d.
/// Velocity nodes sit at cell centers of a symmetric grid with an even
/// number of cells per axis, so no node lies at v = 0 and specular
/// reflection is an exact index permutation.
struct PhaseSpaceGrid {
    int d = 1;
    int Nx = 0;
    int Nv = 0;
    double v_max = 0.0;
    double dx = 0.0;
    double dv = 0.0;

    std::vector<double> vaxis;          // per-axis node coordinates, size Nv
    std::vector<double> vsq;            // |v|^2 per velocity node, size Nv^d
    std::vector<BoundaryFace> faces;    // all spatial boundary faces

    int n_cells = 0;   // Nx^d
    int n_vnodes = 0;  // Nv^d

    double cell_measure() const { return d == 1 ? dx : dx * dx; }
    double v_measure() const { return d == 1 ? dv : dv * dv; }
    double face_area() const { return d == 1 ? 1.0 : dx; }

    int cell_index(int ix, int iy = 0) const { return d == 1 ? ix : ix * Nx + iy; }
    int vnode_index(int jx, int jy = 0) const { return d == 1 ? jx : jx * Nv + jy; }

    /// Component of velocity node j along the given axis.
    double vcomp(int j, int axis) const
    {
        if (d == 1) return vaxis[static_cast<std::size_t>(j)];
        return axis == 0 ? vaxis[static_cast<std::size_t>(j / Nv)]
                         : vaxis[static_cast<std::size_t>(j % Nv)];
    }

    /// Node index with the velocity component along `axis` negated.
    int mirror_vnode(int j, int axis) const
    {
        if (d == 1) return Nv - 1 - j;
        const int jx = j / Nv, jy = j % Nv;
        return axis == 0 ? (Nv - 1 - jx) * Nv + jy : jx * Nv + (Nv - 1 - jy);
    }

    std::array<double, 2> cell_center(int cell) const
    {
        if (d == 1) return {(cell + 0.5) * dx, 0.0};
        return {(cell / Nx + 0.5) * dx, (cell % Nx + 0.5) * dx};
    }
};

/// Builds the phase-space grid, checking the structural invariants.
inline PhaseSpaceGrid build_grid(int d, int Nx, int Nv, double v_max)
{
    if (d != 1 && d != 2)
        throw ValidationError("grid.d: dimension must be 1 or 2");
    if (Nx < 2)
        throw ValidationError("grid.Nx: need at least 2 spatial cells per axis");
    if (Nv < 2 || Nv % 2 != 0)
        throw ValidationError("grid.Nv: velocity node count must be even and >= 2");
    if (!(v_max > 0.0))
        throw ValidationError("grid.v_max: velocity cutoff must be positive");

    PhaseSpaceGrid g;
    g.d = d;
    g.Nx = Nx;
    g.Nv = Nv;
    g.v_max = v_max;
    g.dx = 1.0 / Nx;
    g.dv = 2.0 * v_max / Nv;
    g.n_cells = d == 1 ? Nx : Nx * Nx;
    g.n_vnodes = d == 1 ? Nv : Nv * Nv;

    g.vaxis.resize(static_cast<std::size_t>(Nv));
    for (int j = 0; j < Nv; ++j)
        g.vaxis[static_cast<std::size_t>(j)] = -v_max + (j + 0.5) * g.dv;

    g.vsq.resize(static_cast<std::size_t>(g.n_vnodes));
    for (int j = 0; j < g.n_vnodes; ++j) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) {
            const double c = g.vcomp(j, a);
            s += c * c;
        }
        g.vsq[static_cast<std::size_t>(j)] = s;
    }

    if (d == 1) {
        g.faces.push_back({0, 0, -1, 0});
        g.faces.push_back({1, 0, +1, Nx - 1});
    } else {
        for (int iy = 0; iy < Nx; ++iy) g.faces.push_back({0, 0, -1, g.cell_index(0, iy)});
        for (int iy = 0; iy < Nx; ++iy) g.faces.push_back({1, 0, +1, g.cell_index(Nx - 1, iy)});
        for (int ix = 0; ix < Nx; ++ix) g.faces.push_back({2, 1, -1, g.cell_index(ix, 0)});
        for (int ix = 0; ix < Nx; ++ix) g.faces.push_back({3, 1, +1, g.cell_index(ix, Nx - 1)});
    }
    return g;
}

/// Diffusivity profile evaluated at every cell center.
inline std::vector<double> tau_cells(const DiffusivityProfile& tau, const PhaseSpaceGrid& g)
{
    std::vector<double> out(static_cast<std::size_t>(g.n_cells));
    if (tau.kind == DiffusivityProfile::Kind::table) {
        if (tau.table.size() != out.size())
            throw ValidationError("model.tau.values: table length " +
                                  std::to_string(tau.table.size()) + " does not match cell count " +
                                  std::to_string(g.n_cells));
        return tau.table;
    }
    for (int i = 0; i < g.n_cells; ++i)
        out[static_cast<std::size_t>(i)] = tau.eval(g.cell_center(i)[0]);
    return out;
}

} // namespace kfp

#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/grid.hpp"
#include "kfp/model.hpp"

namespace kfp {

/// Nonnegative distribution on the phase-space grid, cell-major storage:
/// data[cell * n_vnodes + vnode].
struct DistributionField {
    PhaseSpaceGrid grid;
    std::vector<double> data;

    DistributionField() = default;
    explicit DistributionField(const PhaseSpaceGrid& g)
        : grid(g), data(static_cast<std::size_t>(g.n_cells) * g.n_vnodes, 0.0)
    {
    }

    double& at(int cell, int vnode)
    {
        return data[static_cast<std::size_t>(cell) * grid.n_vnodes + vnode];
    }
    double at(int cell, int vnode) const
    {
        return data[static_cast<std::size_t>(cell) * grid.n_vnodes + vnode];
    }
};

enum class Norm { l1, l2, linf };

/// Total mass, midpoint quadrature over all of phase space.
inline double mass(const DistributionField& f)
{
    double s = 0.0;
    for (double x : f.data) s += x;
    return s * f.grid.cell_measure() * f.grid.v_measure();
}

/// Spatial density rho(x_i) per cell.
inline std::vector<double> density(const DistributionField& f)
{
    const auto& g = f.grid;
    std::vector<double> rho(static_cast<std::size_t>(g.n_cells), 0.0);
    for (int i = 0; i < g.n_cells; ++i) {
        double s = 0.0;
        const double* row = f.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        for (int j = 0; j < g.n_vnodes; ++j) s += row[j];
        rho[static_cast<std::size_t>(i)] = s * g.v_measure();
    }
    return rho;
}

/// Total energy E_f = (1/d) int |v|^2 f dx dv.
inline double energy_functional(const DistributionField& f)
{
    const auto& g = f.grid;
    double s = 0.0;
    for (int i = 0; i < g.n_cells; ++i) {
        const double* row = f.data.data() + static_cast<std::size_t>(i) * g.n_vnodes;
        for (int j = 0; j < g.n_vnodes; ++j) s += row[j] * g.vsq[static_cast<std::size_t>(j)];
    }
    return s * g.cell_measure() * g.v_measure() / g.d;
}

inline double min_value(const DistributionField& f)
{
    double m = std::numeric_limits<double>::infinity();
    for (double x : f.data) m = std::min(m, x);
    return m;
}

inline bool all_finite(const DistributionField& f)
{
    for (double x : f.data)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Weight omega at every velocity node, cached for repeated norms.
inline std::vector<double> weight_table(const WeightSpec& w, const PhaseSpaceGrid& g)
{
    std::vector<double> om(static_cast<std::size_t>(g.n_vnodes));
    for (int j = 0; j < g.n_vnodes; ++j)
        om[static_cast<std::size_t>(j)] = weight_eval_vsq(w, g.vsq[static_cast<std::size_t>(j)]);
    return om;
}

namespace detail {

inline double weighted_accumulate(const DistributionField& f, const DistributionField* g,
                                  const std::vector<double>& om, Norm p)
{
    const auto& gr = f.grid;
    double acc = 0.0;
    for (int i = 0; i < gr.n_cells; ++i) {
        const double* row = f.data.data() + static_cast<std::size_t>(i) * gr.n_vnodes;
        const double* ref =
            g ? g->data.data() + static_cast<std::size_t>(i) * gr.n_vnodes : nullptr;
        for (int j = 0; j < gr.n_vnodes; ++j) {
            const double diff = ref ? row[j] - ref[j] : row[j];
            const double t = om[static_cast<std::size_t>(j)] * std::abs(diff);
            switch (p) {
            case Norm::l1:   acc += t; break;
            case Norm::l2:   acc += t * t; break;
            case Norm::linf: acc = std::max(acc, t); break;
            }
        }
    }
    const double meas = gr.cell_measure() * gr.v_measure();
    switch (p) {
    case Norm::l1: return acc * meas;
    case Norm::l2: return std::sqrt(acc * meas);
    default:       return acc;
    }
}

} // namespace detail

/// Weighted norm ||omega f||_{L^p}, p in {1, 2, inf}.
inline double weighted_norm(const DistributionField& f, const WeightSpec& w, Norm p = Norm::l2)
{
    const auto om = weight_table(w, f.grid);
    return detail::weighted_accumulate(f, nullptr, om, p);
}

/// Weighted distance ||omega (f - g)||_{L^p} on a shared grid.
inline double weighted_distance(const DistributionField& f, const DistributionField& g,
                                const WeightSpec& w, Norm p = Norm::l2)
{
    if (f.data.size() != g.data.size())
        throw ValidationError("weighted_distance: fields live on different grids");
    const auto om = weight_table(w, f.grid);
    return detail::weighted_accumulate(f, &g, om, p);
}

/// Same distance with a precomputed weight table (hot path of the integrator).
inline double weighted_distance_cached(const DistributionField& f, const DistributionField& g,
                                       const std::vector<double>& om, Norm p = Norm::l2)
{
    return detail::weighted_accumulate(f, &g, om, p);
}

/// Local Maxwellian rho(x) M_{T(x)}(v). With renormalize set, each velocity
/// kernel is rescaled so its discrete mass is exactly rho(x) dx^d.
inline DistributionField project_maxwellian(const PhaseSpaceGrid& g,
                                            const std::vector<double>& rho,
                                            const std::vector<double>& T, bool renormalize = true)
{
    if (rho.size() != static_cast<std::size_t>(g.n_cells) ||
        T.size() != static_cast<std::size_t>(g.n_cells))
        throw ValidationError("project_maxwellian: rho/T must hold one value per cell");
    DistributionField f(g);
    std::vector<double> kernel(static_cast<std::size_t>(g.n_vnodes));
    for (int i = 0; i < g.n_cells; ++i) {
        if (!(T[static_cast<std::size_t>(i)] > 0.0))
            throw ValidationError("project_maxwellian: temperature must be positive");
        double z = 0.0;
        for (int j = 0; j < g.n_vnodes; ++j) {
            kernel[static_cast<std::size_t>(j)] =
                maxwellian_vsq(T[static_cast<std::size_t>(i)], g.vsq[static_cast<std::size_t>(j)], g.d);
            z += kernel[static_cast<std::size_t>(j)];
        }
        z *= g.v_measure();
        const double scale =
            renormalize ? rho[static_cast<std::size_t>(i)] / z : rho[static_cast<std::size_t>(i)];
        for (int j = 0; j < g.n_vnodes; ++j)
            f.at(i, j) = scale * kernel[static_cast<std::size_t>(j)];
    }
    return f;
}

inline DistributionField project_maxwellian(const PhaseSpaceGrid& g, double rho, double T,
                                            bool renormalize = true)
{
    std::vector<double> r(static_cast<std::size_t>(g.n_cells), rho);
    std::vector<double> t(static_cast<std::size_t>(g.n_cells), T);
    return project_maxwellian(g, r, t, renormalize);
}

namespace detail {

inline std::string fmt17(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

/// Writes the snapshot CSV: a named header line, one line of header values
/// (d, Nx, Nv, v_max, t, mass, energy), then one row of f values per cell.
/// All floats use 17 significant digits so a load reproduces exact bits.
inline void save_snapshot(const DistributionField& f, double t, std::ostream& os)
{
    const auto& g = f.grid;
    os << "d,Nx,Nv,v_max,t,mass,energy\n";
    os << g.d << ',' << g.Nx << ',' << g.Nv << ',' << detail::fmt17(g.v_max) << ','
       << detail::fmt17(t) << ',' << detail::fmt17(mass(f)) << ','
       << detail::fmt17(energy_functional(f)) << '\n';
    for (int i = 0; i < g.n_cells; ++i) {
        for (int j = 0; j < g.n_vnodes; ++j) {
            if (j) os << ',';
            os << detail::fmt17(f.at(i, j));
        }
        os << '\n';
    }
}

struct Snapshot {
    DistributionField field;
    double t = 0.0;
    double header_mass = 0.0;
    double header_energy = 0.0;
};

inline Snapshot load_snapshot(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "d,Nx,Nv,v_max,t,mass,energy")
        throw ConfigError("snapshot: missing or malformed header line");
    if (!std::getline(is, line))
        throw ConfigError("snapshot: missing header values");

    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : s) {
            if (c == ',') { parts.push_back(cur); cur.clear(); }
            else cur.push_back(c);
        }
        parts.push_back(cur);
        return parts;
    };

    const auto head = split(line);
    if (head.size() != 7)
        throw ConfigError("snapshot: expected 7 header values, got " + std::to_string(head.size()));
    const int d = std::stoi(head[0]);
    const int Nx = std::stoi(head[1]);
    const int Nv = std::stoi(head[2]);
    const double v_max = std::strtod(head[3].c_str(), nullptr);

    Snapshot snap;
    snap.t = std::strtod(head[4].c_str(), nullptr);
    snap.header_mass = std::strtod(head[5].c_str(), nullptr);
    snap.header_energy = std::strtod(head[6].c_str(), nullptr);
    snap.field = DistributionField(build_grid(d, Nx, Nv, v_max));

    const auto& g = snap.field.grid;
    for (int i = 0; i < g.n_cells; ++i) {
        if (!std::getline(is, line))
            throw ConfigError("snapshot: truncated after " + std::to_string(i) + " cells");
        const auto parts = split(line);
        if (parts.size() != static_cast<std::size_t>(g.n_vnodes))
            throw ConfigError("snapshot: cell row " + std::to_string(i) + " has " +
                              std::to_string(parts.size()) + " values, expected " +
                              std::to_string(g.n_vnodes));
        for (int j = 0; j < g.n_vnodes; ++j)
            snap.field.at(i, j) = std::strtod(parts[static_cast<std::size_t>(j)].c_str(), nullptr);
    }
    return snap;
}

} // namespace kfp

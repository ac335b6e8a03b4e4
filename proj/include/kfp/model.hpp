#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "kfp/errors.hpp"

namespace kfp {

enum class BoundaryMode { periodic, maxwell };

/// One BGK heat bath acting on an axis-aligned sub-box of the unit domain.
struct ThermostatSpec {
    double eta = 1.0;
    double temperature = 1.0;
    /// Region bounds {x_lo, x_hi, y_lo, y_hi}; entries beyond the active
    /// dimension are ignored.
    std::array<double, 4> region{0.0, 1.0, 0.0, 1.0};

    bool contains(const std::array<double, 2>& x, int d) const
    {
        for (int a = 0; a < d; ++a)
            if (x[a] < region[2 * a] || x[a] > region[2 * a + 1])
                return false;
        return true;
    }
};

/// Maxwell reflection data stored per boundary side (2*d sides).
/// Side order: {x=0, x=1} in d=1 and {x=0, x=1, y=0, y=1} in d=2.
/// Theta entries are consulted only on sides with positive accommodation.
struct BoundarySpec {
    BoundaryMode mode = BoundaryMode::periodic;
    std::vector<double> accommodation;
    std::vector<double> wall_temperature;

    double iota(int side) const
    {
        if (accommodation.empty()) return 0.0;
        return accommodation.size() == 1 ? accommodation[0]
                                         : accommodation[static_cast<std::size_t>(side)];
    }
    double theta(int side) const
    {
        if (wall_temperature.empty()) return 1.0;
        return wall_temperature.size() == 1
                   ? wall_temperature[0]
                   : wall_temperature[static_cast<std::size_t>(side)];
    }
};

/// Velocity weight omega(v) = <v>^k exp(zeta <v>^s), <v> = sqrt(1+|v|^2).
struct WeightSpec {
    double k = 3.0;
    double zeta = 0.01;
    double s = 1.0;
};

/// Spatial diffusivity profile tau(x). Analytic kinds vary along the first
/// axis only; the table kind carries one value per spatial cell (row-major).
struct DiffusivityProfile {
    enum class Kind { constant, linear, two_plateau, table };
    Kind kind = Kind::constant;
    double value = 1.0;
    double left = 1.0;
    double right = 1.0;
    double split = 0.5;
    std::vector<double> table;

    /// Pointwise value for the analytic kinds; table lookups go through
    /// tau_cells() in grid.hpp where the cell layout is known.
    double eval(double x) const
    {
        switch (kind) {
        case Kind::constant:    return value;
        case Kind::linear:      return left + (right - left) * x;
        case Kind::two_plateau: return x < split ? left : right;
        case Kind::table:       break;
        }
        throw ValidationError("tau table profile has no pointwise evaluation");
    }

    double tau_min() const
    {
        switch (kind) {
        case Kind::constant:    return value;
        case Kind::linear:
        case Kind::two_plateau: return std::min(left, right);
        case Kind::table: {
            double m = table.empty() ? 0.0 : table[0];
            for (double t : table) m = std::min(m, t);
            return m;
        }
        }
        return 0.0;
    }

    double tau_max() const
    {
        switch (kind) {
        case Kind::constant:    return value;
        case Kind::linear:
        case Kind::two_plateau: return std::max(left, right);
        case Kind::table: {
            double m = table.empty() ? 0.0 : table[0];
            for (double t : table) m = std::max(m, t);
            return m;
        }
        }
        return 0.0;
    }
};

/// Full model description for the nonlinear equation
///   df/dt = -v.grad_x f + (alpha E_f + (1-alpha) tau) Lap_v f + Div_v(v f) + G f.
struct ModelParams {
    int d = 1;
    double alpha = 0.0;
    DiffusivityProfile tau;
    std::vector<ThermostatSpec> thermostats;
    BoundarySpec boundary;
    WeightSpec weight;
};

/// Maxwellian M_T(v) = (2 pi T)^(-d/2) exp(-|v|^2 / (2T)), given |v|^2.
inline double maxwellian_vsq(double T, double vsq, int d)
{
    const double norm = std::pow(2.0 * std::numbers::pi * T, -0.5 * d);
    return norm * std::exp(-vsq / (2.0 * T));
}

inline double maxwellian(double T, const double* v, int d)
{
    double vsq = 0.0;
    for (int a = 0; a < d; ++a) vsq += v[a] * v[a];
    return maxwellian_vsq(T, vsq, d);
}

/// Wall Maxwellian, normalized so its half-space mass flux integrates to one:
/// M_wall = sqrt(2 pi / Theta) M_Theta.
inline double wall_maxwellian_vsq(double theta, double vsq, int d)
{
    return std::sqrt(2.0 * std::numbers::pi / theta) * maxwellian_vsq(theta, vsq, d);
}

inline double wall_maxwellian(double theta, const double* v, int d)
{
    double vsq = 0.0;
    for (int a = 0; a < d; ++a) vsq += v[a] * v[a];
    return wall_maxwellian_vsq(theta, vsq, d);
}

/// Weight omega(v) evaluated from |v|^2.
inline double weight_eval_vsq(const WeightSpec& w, double vsq)
{
    const double br = std::sqrt(1.0 + vsq);
    double e = 0.0;
    if (w.zeta != 0.0)
        e = w.zeta * (w.s == 1.0 ? br : std::pow(br, w.s));
    return std::pow(br, w.k) * std::exp(e);
}

inline double weight_eval(const WeightSpec& w, const double* v, int d)
{
    double vsq = 0.0;
    for (int a = 0; a < d; ++a) vsq += v[a] * v[a];
    return weight_eval_vsq(w, vsq);
}

/// Checks every model invariant; returns one message per violation, each
/// prefixed with the offending field path. Empty result means valid.
inline std::vector<std::string> validate_params(const ModelParams& p)
{
    std::vector<std::string> issues;
    auto fail = [&issues](const std::string& path, const std::string& msg) {
        issues.push_back(path + ": " + msg);
    };

    if (p.d != 1 && p.d != 2)
        fail("model.d", "dimension must be 1 or 2");
    if (!(p.alpha >= 0.0 && p.alpha < 0.5))
        fail("model.alpha", "alpha outside [0, 1/2)");

    if (p.tau.kind == DiffusivityProfile::Kind::table && p.tau.table.empty())
        fail("model.tau", "table profile has no entries");
    else if (!(p.tau.tau_min() > 0.0))
        fail("model.tau", "lower bound tau0 must be positive");

    for (std::size_t n = 0; n < p.thermostats.size(); ++n) {
        const auto& th = p.thermostats[n];
        const std::string path = "model.thermostats[" + std::to_string(n) + "]";
        if (!(th.eta >= 0.0))
            fail(path + ".eta", "coupling rate must be nonnegative");
        if (!(th.temperature > 0.0))
            fail(path + ".temperature", "bath temperature must be positive");
        const int dd = (p.d == 2) ? 2 : 1;
        for (int a = 0; a < dd; ++a) {
            const double lo = th.region[2 * a], hi = th.region[2 * a + 1];
            if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
                fail(path + ".region", "region must be a nonempty sub-box of the unit domain");
        }
    }

    if (p.boundary.mode == BoundaryMode::maxwell) {
        const std::size_t nsides = static_cast<std::size_t>(2 * p.d);
        const auto& iota = p.boundary.accommodation;
        const auto& theta = p.boundary.wall_temperature;
        if (!(iota.size() == 1 || iota.size() == nsides))
            fail("model.boundary.accommodation",
                 "expected 1 or " + std::to_string(nsides) + " entries");
        if (!(theta.empty() || theta.size() == 1 || theta.size() == nsides))
            fail("model.boundary.wall_temperature",
                 "expected 1 or " + std::to_string(nsides) + " entries");
        for (std::size_t s = 0; s < nsides; ++s) {
            const double io = p.boundary.iota(static_cast<int>(s));
            if (!(io >= 0.0 && io <= 1.0)) {
                fail("model.boundary.accommodation", "accommodation outside [0, 1]");
                break;
            }
        }
        for (std::size_t s = 0; s < nsides; ++s) {
            const double io = p.boundary.iota(static_cast<int>(s));
            if (io > 0.0 && !(p.boundary.theta(static_cast<int>(s)) > 0.0)) {
                fail("model.boundary.wall_temperature",
                     "wall temperature must be positive where accommodation > 0");
                break;
            }
        }
    }

    const auto& w = p.weight;
    if (!(w.k >= 0.0))
        fail("model.weight.k", "polynomial order must be nonnegative");
    if (!(w.s >= 0.0 && w.s <= 1.0))
        fail("model.weight.s", "stretch exponent outside [0, 1]");
    if (!(w.zeta >= 0.0))
        fail("model.weight.zeta", "zeta must be nonnegative");
    if (w.s == 0.0 && !(w.k > p.d + 1))
        fail("model.weight.k", "k must exceed d+1 when s=0");
    if (w.s > 0.0 && !(w.zeta > 0.0))
        fail("model.weight.zeta", "zeta must be positive when s > 0");

    return issues;
}

} // namespace kfp

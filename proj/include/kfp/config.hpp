#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/grid.hpp"
#include "kfp/integrator.hpp"
#include "kfp/model.hpp"
#include "kfp/ness.hpp"
#include "kfp/toml.hpp"

namespace kfp {

struct GridOptions {
    int Nx = 32;
    int Nv = 64;
    double v_max = 0.0;  // <= 0 selects 8 sqrt(T_max) over all model temperatures
};

struct InitialOptions {
    double temperature = 0.0;  // <= 0 selects the mean of tau
};

struct RunConfig {
    ModelParams model;
    GridOptions grid;
    IntegratorConfig integrator;
    InitialOptions initial;
    FixedPointOptions ness;
    StabilityOptions stability;
    std::string out_directory = "out";
    std::string out_prefix;
    std::string out_override;  // CLI --out, takes precedence but is never echoed
};

inline const std::string& effective_out_dir(const RunConfig& cfg)
{
    return cfg.out_override.empty() ? cfg.out_directory : cfg.out_override;
}

namespace cfgdetail {

/// Tracks which parsed nodes the schema actually read, so that leftovers
/// can be reported as unknown keys instead of being silently ignored.
struct Reader {
    const toml::Value& node;
    std::string path;
    std::set<const void*>& used;

    std::string where(const std::string& key) const
    {
        return path.empty() ? key : path + "." + key;
    }

    const toml::Value* find(const std::string& key) const
    {
        auto it = node.tab.find(key);
        if (it == node.tab.end()) return nullptr;
        used.insert(&it->second);
        return &it->second;
    }

    const toml::Value& require(const std::string& key) const
    {
        const toml::Value* v = find(key);
        if (!v) throw ConfigError("missing required key '" + where(key) + "'");
        return *v;
    }

    double number(const std::string& key, double def) const
    {
        const toml::Value* v = find(key);
        if (!v) return def;
        if (!v->is_number())
            throw ConfigError("'" + where(key) + "' must be a number (line " +
                              std::to_string(v->line) + ")");
        return v->as_number();
    }

    double number_req(const std::string& key) const
    {
        const toml::Value& v = require(key);
        if (!v.is_number())
            throw ConfigError("'" + where(key) + "' must be a number (line " +
                              std::to_string(v.line) + ")");
        return v.as_number();
    }

    int integer(const std::string& key, int def) const
    {
        const toml::Value* v = find(key);
        if (!v) return def;
        if (v->type != toml::Value::Type::integer)
            throw ConfigError("'" + where(key) + "' must be an integer (line " +
                              std::to_string(v->line) + ")");
        return static_cast<int>(v->ival);
    }

    std::string string(const std::string& key, const std::string& def) const
    {
        const toml::Value* v = find(key);
        if (!v) return def;
        if (v->type != toml::Value::Type::string_t)
            throw ConfigError("'" + where(key) + "' must be a string (line " +
                              std::to_string(v->line) + ")");
        return v->str;
    }

    std::optional<std::vector<double>> number_or_array(const std::string& key) const
    {
        const toml::Value* v = find(key);
        if (!v) return std::nullopt;
        std::vector<double> out;
        if (v->is_number()) {
            out.push_back(v->as_number());
            return out;
        }
        if (v->type != toml::Value::Type::array)
            throw ConfigError("'" + where(key) + "' must be a number or an array (line " +
                              std::to_string(v->line) + ")");
        for (const auto& e : v->arr) {
            if (!e.is_number())
                throw ConfigError("'" + where(key) + "' must hold numbers only (line " +
                                  std::to_string(v->line) + ")");
            out.push_back(e.as_number());
        }
        return out;
    }

    std::optional<Reader> table(const std::string& key) const
    {
        const toml::Value* v = find(key);
        if (!v) return std::nullopt;
        if (v->type != toml::Value::Type::table)
            throw ConfigError("'" + where(key) + "' must be a table (line " +
                              std::to_string(v->line) + ")");
        return Reader{*v, where(key), used};
    }

    std::vector<Reader> table_array(const std::string& key) const
    {
        const toml::Value* v = find(key);
        std::vector<Reader> out;
        if (!v) return out;
        if (v->type != toml::Value::Type::array)
            throw ConfigError("'" + where(key) + "' must be an array of tables (line " +
                              std::to_string(v->line) + ")");
        for (std::size_t i = 0; i < v->arr.size(); ++i) {
            const auto& e = v->arr[i];
            if (e.type != toml::Value::Type::table)
                throw ConfigError("'" + where(key) + "' must be an array of tables (line " +
                                  std::to_string(v->line) + ")");
            used.insert(&e);
            out.push_back(Reader{e, where(key) + "[" + std::to_string(i) + "]", used});
        }
        return out;
    }
};

inline void collect_unknown(const toml::Value& table, const std::string& path,
                            const std::set<const void*>& used, std::vector<std::string>& out)
{
    for (const auto& [key, v] : table.tab) {
        const std::string full = path.empty() ? key : path + "." + key;
        if (!used.count(&v)) {
            out.push_back("unknown key '" + full + "' (line " + std::to_string(v.line) + ")");
            continue;
        }
        if (v.type == toml::Value::Type::table) {
            collect_unknown(v, full, used, out);
        } else if (v.type == toml::Value::Type::array) {
            for (std::size_t i = 0; i < v.arr.size(); ++i)
                if (v.arr[i].type == toml::Value::Type::table)
                    collect_unknown(v.arr[i], full + "[" + std::to_string(i) + "]", used, out);
        }
    }
}

inline DiffusivityProfile read_tau(const Reader& r)
{
    DiffusivityProfile p;
    const std::string profile = r.string("profile", "constant");
    if (profile == "constant") {
        p.kind = DiffusivityProfile::Kind::constant;
        p.value = r.number("value", 1.0);
    } else if (profile == "linear") {
        p.kind = DiffusivityProfile::Kind::linear;
        p.left = r.number_req("left");
        p.right = r.number_req("right");
    } else if (profile == "two_plateau") {
        p.kind = DiffusivityProfile::Kind::two_plateau;
        p.left = r.number_req("left");
        p.right = r.number_req("right");
        p.split = r.number("split", 0.5);
    } else if (profile == "table") {
        p.kind = DiffusivityProfile::Kind::table;
        auto vals = r.number_or_array("values");
        if (!vals)
            throw ConfigError("missing required key '" + r.where("values") + "'");
        p.table = std::move(*vals);
    } else {
        throw ConfigError("'" + r.where("profile") + "': unknown profile \"" + profile + "\"");
    }
    return p;
}

inline ModelParams read_model(const Reader& r)
{
    ModelParams m;
    m.d = r.integer("d", 1);
    m.alpha = r.number("alpha", 0.0);
    if (auto tau = r.table("tau"))
        m.tau = read_tau(*tau);
    for (const auto& tr : r.table_array("thermostats")) {
        ThermostatSpec t;
        t.eta = tr.number_req("eta");
        t.temperature = tr.number_req("temperature");
        t.region = {0.0, 1.0, 0.0, 1.0};
        if (auto reg = tr.number_or_array("region")) {
            const std::size_t want = m.d == 2 ? 4 : 2;
            if (reg->size() != want)
                throw ConfigError("'" + tr.where("region") + "' needs " + std::to_string(want) +
                                  " entries for d = " + std::to_string(m.d));
            for (std::size_t i = 0; i < want; ++i) t.region[i] = (*reg)[i];
            if (want == 2) { t.region[2] = 0.0; t.region[3] = 1.0; }
        }
        m.thermostats.push_back(t);
    }
    if (auto br = r.table("boundary")) {
        const std::string mode = br->string("mode", "periodic");
        if (mode == "periodic") {
            m.boundary.mode = BoundaryMode::periodic;
        } else if (mode == "maxwell") {
            m.boundary.mode = BoundaryMode::maxwell;
        } else {
            throw ConfigError("'" + br->where("mode") + "': unknown mode \"" + mode + "\"");
        }
        if (auto acc = br->number_or_array("accommodation"))
            m.boundary.accommodation = std::move(*acc);
        if (auto wt = br->number_or_array("wall_temperature"))
            m.boundary.wall_temperature = std::move(*wt);
    }
    m.weight.k = static_cast<double>(m.d) + 2.0;
    if (auto wr = r.table("weight")) {
        m.weight.k = wr->number("k", m.weight.k);
        m.weight.zeta = wr->number("zeta", m.weight.zeta);
        m.weight.s = wr->number("s", m.weight.s);
    }
    return m;
}

} // namespace cfgdetail

/// Parses a TOML run configuration. Schema errors (types, unknown keys,
/// missing required fields) raise ConfigError; parameter range violations
/// are left to validate_config.
inline RunConfig parse_config(const std::string& text)
{
    const toml::Value root = toml::parse(text);
    std::set<const void*> used;
    cfgdetail::Reader r{root, "", used};

    RunConfig cfg;
    if (auto mr = r.table("model"))
        cfg.model = cfgdetail::read_model(*mr);
    else
        cfg.model.weight.k = static_cast<double>(cfg.model.d) + 2.0;

    if (auto gr = r.table("grid")) {
        cfg.grid.Nx = gr->integer("Nx", cfg.grid.Nx);
        cfg.grid.Nv = gr->integer("Nv", cfg.grid.Nv);
        cfg.grid.v_max = gr->number("v_max", cfg.grid.v_max);
    }
    if (auto ir = r.table("integrator")) {
        cfg.integrator.dt = ir->number("dt", cfg.integrator.dt);
        cfg.integrator.t_final = ir->number("t_final", cfg.integrator.t_final);
        cfg.integrator.steady_tol = ir->number("steady_tol", cfg.integrator.steady_tol);
        cfg.integrator.record_every = ir->integer("record_every", cfg.integrator.record_every);
        const std::string mode = ir->string("mode", "self_consistent");
        if (mode == "self_consistent")
            cfg.integrator.self_consistent = true;
        else if (mode == "frozen")
            cfg.integrator.self_consistent = false;
        else
            throw ConfigError("'" + ir->where("mode") + "': unknown mode \"" + mode + "\"");
    }
    if (auto init = r.table("initial"))
        cfg.initial.temperature = init->number("temperature", cfg.initial.temperature);
    if (auto nr = r.table("ness")) {
        cfg.ness.theta = nr->number("theta", cfg.ness.theta);
        cfg.ness.tol_fp = nr->number("tol_fp", cfg.ness.tol_fp);
        cfg.ness.max_outer = nr->integer("max_outer", cfg.ness.max_outer);
        cfg.ness.alpha_budget = nr->number("alpha_budget", cfg.ness.alpha_budget);
        cfg.ness.interval_margin = nr->number("interval_margin", cfg.ness.interval_margin);
    }
    if (auto sr = r.table("stability")) {
        cfg.stability.amplitude = sr->number("amplitude", cfg.stability.amplitude);
        cfg.stability.t_hot = sr->number("t_hot", cfg.stability.t_hot);
        cfg.stability.t_cold = sr->number("t_cold", cfg.stability.t_cold);
        cfg.stability.t_final = sr->number("t_final", cfg.stability.t_final);
        cfg.stability.record_every = sr->integer("record_every", cfg.stability.record_every);
    }
    if (auto orr = r.table("output")) {
        cfg.out_directory = orr->string("directory", cfg.out_directory);
        cfg.out_prefix = orr->string("prefix", cfg.out_prefix);
    }

    std::vector<std::string> unknown;
    cfgdetail::collect_unknown(root, "", used, unknown);
    if (!unknown.empty()) {
        std::string msg = unknown.front();
        for (std::size_t i = 1; i < unknown.size(); ++i) msg += "; " + unknown[i];
        throw ConfigError(msg);
    }
    return cfg;
}

/// Range and consistency checks beyond what the schema can express.
/// Returns every violation, one message per entry.
inline std::vector<std::string> validate_config(const RunConfig& cfg)
{
    std::vector<std::string> issues = validate_params(cfg.model);
    if (cfg.grid.Nx < 2)
        issues.push_back("grid.Nx must be at least 2");
    if (cfg.grid.Nv < 2 || cfg.grid.Nv % 2 != 0)
        issues.push_back("grid.Nv must be even and at least 2");
    if (cfg.model.tau.kind == DiffusivityProfile::Kind::table) {
        const std::size_t want = cfg.model.d == 2
                                     ? static_cast<std::size_t>(cfg.grid.Nx) * cfg.grid.Nx
                                     : static_cast<std::size_t>(cfg.grid.Nx);
        if (cfg.model.tau.table.size() != want)
            issues.push_back("model.tau.values must hold " + std::to_string(want) +
                             " entries for this grid");
    }
    if (cfg.integrator.t_final <= 0.0)
        issues.push_back("integrator.t_final must be positive");
    if (cfg.integrator.steady_tol <= 0.0)
        issues.push_back("integrator.steady_tol must be positive");
    if (cfg.integrator.record_every < 0)
        issues.push_back("integrator.record_every must be nonnegative");
    if (cfg.ness.theta <= 0.0 || cfg.ness.theta > 1.0)
        issues.push_back("ness.theta must lie in (0, 1]");
    if (cfg.ness.tol_fp <= 0.0)
        issues.push_back("ness.tol_fp must be positive");
    if (cfg.ness.max_outer < 1)
        issues.push_back("ness.max_outer must be at least 1");
    if (cfg.stability.amplitude < 0.0)
        issues.push_back("stability.amplitude must be nonnegative");
    if (cfg.stability.t_final <= 0.0)
        issues.push_back("stability.t_final must be positive");
    return issues;
}

/// Largest temperature scale the model exposes: sup tau, thermostat targets,
/// and wall temperatures on sides with nonzero accommodation.
inline double max_temperature_scale(const ModelParams& m)
{
    double T = m.tau.tau_max();
    for (const auto& t : m.thermostats) T = std::max(T, t.temperature);
    if (m.boundary.mode == BoundaryMode::maxwell)
        for (int s = 0; s < 2 * m.d; ++s)
            if (m.boundary.iota(s) > 0.0) T = std::max(T, m.boundary.theta(s));
    return T;
}

inline double resolved_v_max(const RunConfig& cfg)
{
    if (cfg.grid.v_max > 0.0) return cfg.grid.v_max;
    return 8.0 * std::sqrt(max_temperature_scale(cfg.model));
}

inline PhaseSpaceGrid grid_from_config(const RunConfig& cfg)
{
    return build_grid(cfg.model.d, cfg.grid.Nx, cfg.grid.Nv, resolved_v_max(cfg));
}

inline double resolved_initial_temperature(const RunConfig& cfg, const PhaseSpaceGrid& grid)
{
    if (cfg.initial.temperature > 0.0) return cfg.initial.temperature;
    return tau_mean(tau_cells(cfg.model.tau, grid));
}

} // namespace kfp

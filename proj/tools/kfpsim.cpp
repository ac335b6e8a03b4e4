#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "kfp/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"kfpsim: phase-space solver for a weakly nonlinear kinetic "
                 "Fokker-Planck equation with BGK thermostats and Maxwell walls"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"validate", "Parse and validate a configuration, echo the resolved parameters"},
        {"simulate", "Time-march the configured initial data and record diagnostics"},
        {"linear-ness", "Relax to the steady state of the linear (frozen tau) problem"},
        {"ness", "Self-consistent steady state via the energy fixed-point iteration"},
        {"stability", "Perturb the steady state and fit the relaxation rate"},
        {"oracle-check", "Cross-check closed forms, the quadrature oracle, and the energy budget"}};
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "TOML run configuration")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides [output].directory)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    kfp::RunConfig cfg;
    try {
        cfg = kfp::parse_config(kfp::read_file(config_path));
        const auto issues = kfp::validate_config(cfg);
        if (!issues.empty()) {
            for (const auto& msg : issues) std::cerr << "error: " << msg << '\n';
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    cfg.out_override = out_dir;

    try {
        const kfp::CommandOutcome out = kfp::run_command(cmd, cfg);
        if (cmd == "validate") {
            std::cout << out.summary.dump(2) << '\n';
        } else {
            std::cout << out.summary["status"].get<std::string>() << ": summary written to "
                      << out.paths.summary_json << '\n';
        }
        return out.exit_code;
    } catch (const kfp::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const kfp::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const kfp::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        kfp::write_failure_summary(cmd, e.what(), "numerical", kfp::effective_out_dir(cfg),
                                   cfg.out_prefix);
        return 3;
    } catch (const kfp::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        kfp::write_failure_summary(cmd, e.what(), "convergence", kfp::effective_out_dir(cfg),
                                   cfg.out_prefix);
        return 3;
    }
}

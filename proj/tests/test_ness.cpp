#include <catch2/catch_amalgamated.hpp>

#include <kfp/analysis.hpp>
#include <kfp/ness.hpp>

#include <cmath>

using namespace kfp;

namespace {

ModelParams homogeneous_params(double alpha) {
    ModelParams p;
    p.d = 1;
    p.alpha = alpha;
    p.tau.value = 1.0;
    ThermostatSpec th;
    th.eta = 2.0;
    th.temperature = 3.0;
    p.thermostats.push_back(th);
    return p;
}

IntegratorConfig steady_cfg() {
    IntegratorConfig icfg;
    icfg.dt = 0.004;
    icfg.t_final = 60.0;
    icfg.steady_tol = 1e-10;
    icfg.record_every = 0;
    return icfg;
}

} // namespace

TEST_CASE("pure fokker-planck steady state is the discrete maxwellian", "[ness]") {
    ModelParams p;
    p.d = 1;
    p.tau.value = 1.0;
    const auto g = build_grid(1, 4, 64, 8.0);
    const auto sr = linear_steady(p, g, steady_cfg(), tau_cells(p.tau, g));
    // The start state is already the exact discrete equilibrium.
    CHECK(sr.steps == 1);
    CHECK(sr.energy == Catch::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(mass(sr.field) - 1.0) <= 1e-14);
}

TEST_CASE("common-temperature diffusive walls hold the global maxwellian", "[ness]") {
    ModelParams p;
    p.d = 1;
    p.tau.value = 1.0;
    p.boundary.mode = BoundaryMode::maxwell;
    p.boundary.accommodation = {1.0};
    p.boundary.wall_temperature = {1.0};
    const auto g = build_grid(1, 8, 64, 8.0);
    IntegratorConfig icfg = steady_cfg();
    icfg.dt = 0.0;  // cfl
    const auto sr = linear_steady(p, g, icfg, tau_cells(p.tau, g));
    CHECK(sr.steps <= 2);
    CHECK(sr.energy == Catch::Approx(1.0).epsilon(0.01));
}

TEST_CASE("homogeneous thermostat steady energy matches the closed form", "[ness]") {
    const auto p = homogeneous_params(0.0);
    const auto g = build_grid(1, 4, 64, 8.0);
    const auto sr = linear_steady(p, g, steady_cfg(), tau_cells(p.tau, g));
    CHECK(sr.energy == Catch::Approx(homogeneous_energy_closed(1.0, 2.0, 3.0)).epsilon(0.01));
    CHECK(sr.residual <= 1e-10);
}

TEST_CASE("linear steady reports a missed deadline", "[ness]") {
    const auto p = homogeneous_params(0.0);
    const auto g = build_grid(1, 4, 64, 8.0);
    IntegratorConfig icfg = steady_cfg();
    icfg.t_final = 0.05;
    icfg.steady_tol = 1e-14;
    CHECK_THROWS_AS(linear_steady(p, g, icfg, tau_cells(p.tau, g)), ConvergenceError);
}

TEST_CASE("the fixed-point map is constant in nu when alpha vanishes", "[ness]") {
    const auto p = homogeneous_params(0.0);
    const auto g = build_grid(1, 4, 64, 8.0);
    const auto icfg = steady_cfg();
    const double f0 = map_F(p, g, icfg, 0.0).energy;
    const double f4 = map_F(p, g, icfg, 4.0).energy;
    CHECK(f0 == Catch::Approx(f4).margin(1e-12));
    CHECK_THROWS_AS(map_F(p, g, icfg, -1.0), ValidationError);
}

TEST_CASE("the fixed-point map tracks its closed form and stays gentle", "[ness]") {
    const auto p = homogeneous_params(0.05);
    const auto g = build_grid(1, 4, 64, 8.0);
    const auto icfg = steady_cfg();

    const double f15 = map_F(p, g, icfg, 1.5).energy;
    const double closed = homogeneous_energy_closed(0.05 * 1.5 + 0.95, 2.0, 3.0);
    CHECK(f15 == Catch::Approx(closed).epsilon(0.01));

    // Continuity probe: the sampled slope should be near 2 alpha / (eta + 2)
    // and in particular far below one.
    const double fa = map_F(p, g, icfg, 1.8).energy;
    const double fb = map_F(p, g, icfg, 2.2).energy;
    CHECK(fb > fa);
    const double slope = (fb - fa) / 0.4;
    CHECK(slope == Catch::Approx(2.0 * 0.05 / 4.0).margin(0.02));
}

TEST_CASE("fixed point converges to the closed-form energy", "[ness]") {
    const auto p = homogeneous_params(0.05);
    const auto g = build_grid(1, 4, 64, 8.0);
    const auto fp = fixed_point_ness(p, g, steady_cfg());

    const double star = nu_star_closed(1.0, 2.0, 3.0, 0.05);
    CHECK(fp.nu_star == Catch::Approx(star).epsilon(0.01));
    CHECK(fp.E0 == Catch::Approx(2.0).epsilon(0.01));
    CHECK(fp.iterations <= 20);
    CHECK(fp.residual <= 1e-4);
    CHECK(fp.within_regime);
    CHECK_FALSE(fp.used_bisection);
    CHECK(fp.history.size() == static_cast<std::size_t>(fp.iterations));
    CHECK(std::abs(mass(fp.ness) - 1.0) <= 1e-13);
    CHECK(min_value(fp.ness) >= 0.0);
}

TEST_CASE("without thermostats the fixed point returns to tau", "[ness]") {
    ModelParams p;
    p.d = 1;
    p.alpha = 0.05;
    p.tau.value = 1.0;
    const auto g = build_grid(1, 4, 64, 8.0);
    const auto fp = fixed_point_ness(p, g, steady_cfg());
    // nu* = 2 (1 - alpha) tau / (2 - 2 alpha) = tau.
    CHECK(fp.nu_star == Catch::Approx(1.0).epsilon(0.01));
}

TEST_CASE("fixed point failure modes raise convergence errors", "[ness]") {
    const auto p = homogeneous_params(0.05);
    const auto g = build_grid(1, 4, 64, 8.0);

    FixedPointOptions strict;
    strict.tol_fp = 1e-13;
    strict.max_outer = 2;
    CHECK_THROWS_AS(fixed_point_ness(p, g, steady_cfg(), strict), ConvergenceError);

    FixedPointOptions cramped;
    cramped.interval_margin = -0.9;  // collapses the guard below E0
    try {
        fixed_point_ness(p, g, steady_cfg(), cramped);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(std::string(e.what()).find("contraction regime") != std::string::npos);
    }
}

TEST_CASE("self-consistent evolution holds the converged ness in place", "[ness]") {
    const auto p = homogeneous_params(0.05);
    const auto g = build_grid(1, 4, 64, 8.0);
    FixedPointOptions tight;
    tight.tol_fp = 1e-9;
    tight.max_outer = 30;
    const auto fp = fixed_point_ness(p, g, steady_cfg(), tight);

    IntegratorConfig icfg = steady_cfg();
    icfg.t_final = 1000.0 * icfg.dt;
    icfg.record_every = 100;
    icfg.stop_at_steady = false;
    const auto rr = run_transient(fp.ness, p, icfg, nullptr, &fp.ness);
    for (const auto& s : rr.trace.samples)
        CHECK(s.l2w_distance <= 10.0 * icfg.steady_tol);
}

TEST_CASE("linear evolution forgets its initial data", "[ness]") {
    ModelParams p;
    p.d = 1;
    p.tau.value = 1.0;
    const auto g = build_grid(1, 2, 48, 8.0);
    IntegratorConfig icfg;
    icfg.dt = 0.005;
    icfg.t_final = 40.0;
    icfg.steady_tol = 1e-12;
    icfg.record_every = 0;
    const auto hot = run_transient(project_maxwellian(g, 1.0, 2.0), p, icfg);
    const auto cold = run_transient(project_maxwellian(g, 1.0, 0.5), p, icfg);
    const double dist = weighted_distance(hot.field, cold.field, p.weight);
    const double scale = weighted_norm(hot.field, p.weight);
    CHECK(dist / scale <= 1e-6);
}

TEST_CASE("stability experiment reports a clean exponential return", "[ness]") {
    ModelParams p;
    p.d = 1;
    p.tau.value = 1.0;
    const auto g = build_grid(1, 4, 48, 8.0);
    const auto base = project_maxwellian(g, 1.0, 1.0);

    IntegratorConfig icfg;
    icfg.dt = 0.004;
    icfg.steady_tol = 1e-10;
    StabilityOptions opts;
    opts.amplitude = 1e-3;
    opts.t_final = 6.0;
    opts.record_every = 10;
    const auto st = stability_experiment(p, base, icfg, opts);

    CHECK(st.initial_distance > 0.0);
    REQUIRE(st.fit.status == DecayFitStatus::ok);
    CHECK(st.fit.rate > 0.0);
    CHECK(st.fit.r_squared >= 0.99);
    CHECK(st.fit.efolds >= 1.0);
}

TEST_CASE("zero-amplitude stability runs produce no decay signal", "[ness]") {
    ModelParams p;
    p.d = 1;
    p.tau.value = 1.0;
    const auto g = build_grid(1, 4, 32, 8.0);
    const auto base = project_maxwellian(g, 1.0, 1.0);
    IntegratorConfig icfg;
    icfg.dt = 0.01;
    StabilityOptions opts;
    opts.amplitude = 0.0;
    opts.t_final = 1.0;
    opts.record_every = 5;
    const auto st = stability_experiment(p, base, icfg, opts);
    CHECK(st.fit.status != DecayFitStatus::ok);
    CHECK(st.initial_distance <= 1e-12);
}

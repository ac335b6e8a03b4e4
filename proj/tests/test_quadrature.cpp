#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "kfp/quadrature.hpp"

using kfp::integrate;

TEST_CASE("polynomials integrate exactly", "[quadrature]")
{
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(integrate([](double x) { return 1.0; }, -2.0, 5.0) == Catch::Approx(7.0).epsilon(1e-14));
    CHECK(integrate([](double x) { return x * x * x - x; }, -1.0, 1.0) ==
          Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("sine over a half period", "[quadrature]")
{
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) ==
          Catch::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("half Gaussian mass", "[quadrature]")
{
    const double val = integrate(
        [](double v) { return std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi); }, 0.0,
        8.0, 1e-13);
    CHECK(val == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("narrow peak handled adaptively", "[quadrature]")
{
    // exp(-1000 (x-0.3)^2) integrated over [0,1]; reference via the error function
    const double s = std::sqrt(1000.0);
    const double expected =
        std::sqrt(std::numbers::pi / 1000.0) / 2.0 * (std::erf(s * 0.7) + std::erf(s * 0.3));
    const double val =
        integrate([](double x) { return std::exp(-1000.0 * (x - 0.3) * (x - 0.3)); }, 0.0, 1.0,
                  1e-13);
    CHECK(val == Catch::Approx(expected).epsilon(1e-10));
}

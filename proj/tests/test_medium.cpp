#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fdot/medium.hpp"

using namespace fdot;

TEST_CASE("derived constants for the beef parameters") {
    const auto m = derive_medium(0.92, 0.023, 1.37);
    CHECK(m.D == doctest::Approx(0.36231884057971014).epsilon(1e-15));
    CHECK(m.c == doctest::Approx(0.21882661167883212).epsilon(1e-15));
    CHECK(m.beta > 0.0);
}

TEST_CASE("matched index reduces exactly to beta = 1/(2D)") {
    const auto m = derive_medium(1.0 / 3.0, 0.0, 1.0);
    CHECK(m.D == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.c == 0.299792458);
    CHECK(m.beta == 0.5);
    CHECK(robin_coefficient(1.0, 1.0) == 0.5);
}

TEST_CASE("fresnel reflectance closed forms") {
    // matched index: no reflection at any angle
    for (double mu : {0.0, 0.3, 0.7, 1.0}) CHECK(fresnel_reflectance(mu, 1.0) == 0.0);
    // normal incidence ((n-1)/(n+1))^2
    const double r0 = 0.37 / 2.37;
    CHECK(fresnel_reflectance(1.0, 1.37) == doctest::Approx(r0 * r0).epsilon(1e-12));
    // total internal reflection below the critical cosine sqrt(1 - 1/n^2) ~ 0.6835
    CHECK(fresnel_reflectance(0.3, 1.37) == 1.0);
    CHECK(fresnel_reflectance(0.68, 1.37) == 1.0);
    CHECK(fresnel_reflectance(0.69, 1.37) < 1.0);
    CHECK_THROWS_AS(fresnel_reflectance(-0.1, 1.37), std::domain_error);
    CHECK_THROWS_AS(fresnel_reflectance(1.1, 1.37), std::domain_error);
}

TEST_CASE("robin coefficient against an independent composite quadrature") {
    // Simpson rule with 10^4 panels on both Fresnel moment integrals;
    // deliberately does not reuse the library's change of variables.
    const double n = 1.37;
    const int panels = 10000;
    const double h = 1.0 / panels;
    double first = 0.0, second = 0.0;
    auto r_of = [&](double mu) { return fresnel_reflectance(mu, n); };
    for (int i = 0; i < panels; ++i) {
        const double a = i * h, b = a + h, mid = a + h / 2;
        first += h / 6.0 * (r_of(a) * a + 4.0 * r_of(mid) * mid + r_of(b) * b);
        second += h / 6.0 * (r_of(a) * a * a + 4.0 * r_of(mid) * mid * mid + r_of(b) * b * b);
    }
    const double D = 1.0 / (3.0 * 0.92);
    const double oracle = (1.0 - 2.0 * first) / (1.0 + second) / (2.0 * D);
    const double got = robin_coefficient(n, D);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
    // frozen 50-digit reference for the same parameters
    CHECK(got == doctest::Approx(0.60842378912157051).epsilon(1e-12));
}

TEST_CASE("moment factor shrinks beta below the matched-index value") {
    CHECK(robin_coefficient(1.4, 1.0) < 0.5);
    CHECK(robin_coefficient(1.4, 1.0) > 0.0);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(derive_medium(0.0, 0.02, 1.37), std::invalid_argument);
    CHECK_THROWS_AS(derive_medium(-1.0, 0.02, 1.37), std::invalid_argument);
    CHECK_THROWS_AS(derive_medium(0.92, -0.01, 1.37), std::invalid_argument);
    CHECK_THROWS_AS(derive_medium(0.92, 0.02, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(robin_coefficient(1.37, 0.0), std::invalid_argument);
}

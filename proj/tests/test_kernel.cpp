#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fdot/irf.hpp"
#include "fdot/kernel.hpp"
#include "fdot/quadrature.hpp"
#include "fdot/rng.hpp"

using namespace fdot;

namespace {

const OpticalMedium kBeef = derive_medium(0.92, 0.023, 1.37);

// Medium with the 17-digit beta used by the arbitrary-precision references,
// pinned so the frozen values below stay valid independent of the Fresnel
// quadrature.
OpticalMedium beef_pinned() {
    OpticalMedium m = kBeef;
    m.beta = 0.60842378912157051;
    return m;
}

double pde_residual(const Vec3& r, const Vec3& r_p, double t, const OpticalMedium& m, double h,
                    double* scale_out = nullptr) {
    const double ht = 5.0 * h;
    auto G = [&](double x, double y, double z, double tt) {
        return greens_function({x, y, z}, r_p, tt, m);
    };
    const double g0 = G(r.x, r.y, r.z, t);
    const double dt_term = (G(r.x, r.y, r.z, t + ht) - G(r.x, r.y, r.z, t - ht)) / (2.0 * ht);
    double lap = 0.0;
    lap += (G(r.x + h, r.y, r.z, t) - 2.0 * g0 + G(r.x - h, r.y, r.z, t)) / (h * h);
    lap += (G(r.x, r.y + h, r.z, t) - 2.0 * g0 + G(r.x, r.y - h, r.z, t)) / (h * h);
    lap += (G(r.x, r.y, r.z + h, t) - 2.0 * g0 + G(r.x, r.y, r.z - h, t)) / (h * h);
    const double residual = dt_term / m.c - m.D * lap + m.mu_a * g0;
    if (scale_out)
        *scale_out = std::abs(dt_term) / m.c + std::abs(m.D * lap) + std::abs(m.mu_a * g0);
    return std::abs(residual);
}

double robin_residual(double x, double y, const Vec3& r_p, double t, const OpticalMedium& m,
                      double h) {
    auto G = [&](double z) { return greens_function({x, y, z}, r_p, t, m); };
    // second-order one-sided derivative at the boundary
    const double dz = (-3.0 * G(0.0) + 4.0 * G(h) - G(2.0 * h)) / (2.0 * h);
    return std::abs(-dz + m.beta * G(0.0));
}

}  // namespace

TEST_CASE("gauss-legendre rules integrate polynomials and smooth functions") {
    // order n is exact through degree 2n-1
    const auto& r8 = gauss_legendre(8);
    double acc = 0.0;
    for (size_t i = 0; i < r8.nodes.size(); ++i) {
        const double x = map_to_interval(0.0, 1.0, r8.nodes[i]);
        acc += interval_weight(0.0, 1.0, r8.weights[i]) * (x * x * x * x * x);
    }
    CHECK(acc == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    const auto& r32 = gauss_legendre(32);
    acc = 0.0;
    for (size_t i = 0; i < r32.nodes.size(); ++i) {
        const double x = map_to_interval(0.0, 2.0, r32.nodes[i]);
        acc += interval_weight(0.0, 2.0, r32.weights[i]) * std::exp(-x * x);
    }
    CHECK(acc == doctest::Approx(0.8820813907624215).epsilon(1e-13));  // sqrt(pi)/2 erf(2)
}

TEST_CASE("g_axial matches arbitrary-precision references") {
    const auto m = beef_pinned();
    CHECK(g_axial(0.0, 10.0, 500.0, m) ==
          doctest::Approx(0.2020941911785801938).epsilon(1e-13));
    CHECK(g_axial(3.0, 7.0, 800.0, m) ==
          doctest::Approx(0.43830845712170841269).epsilon(1e-13));
}

TEST_CASE("g_axial symmetry, nonnegativity and beta = 0 limit") {
    uint64_t draw = 0;
    for (int i = 0; i < 100; ++i) {
        const double z = 30.0 * uniform_at(11, draw++);
        const double zp = 30.0 * uniform_at(11, draw++);
        const double t = 1.0 + 1500.0 * uniform_at(11, draw++);
        const double a = g_axial(z, zp, t, kBeef);
        const double b = g_axial(zp, z, t, kBeef);
        CHECK(a == b);
        CHECK(a >= 0.0);
    }
    OpticalMedium free_boundary = kBeef;
    free_boundary.beta = 0.0;
    const double Dct4 = 4.0 * free_boundary.D * free_boundary.c * 400.0;
    const double expected = std::exp(-(2.0 - 9.0) * (2.0 - 9.0) / Dct4) +
                            std::exp(-(2.0 + 9.0) * (2.0 + 9.0) / Dct4);
    CHECK(g_axial(2.0, 9.0, 400.0, free_boundary) ==
          doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("g_axial stays finite deep and late where the naive form overflows") {
    for (double sum : {200.0, 600.0, 1000.0}) {
        for (double t : {1e2, 1e4, 1e6}) {
            const double v = g_axial(sum / 2, sum / 2, t, kBeef);
            CHECK(std::isfinite(v));
            CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("greens_function reference value and reciprocity") {
    const auto m = beef_pinned();
    CHECK(greens_function({0, 0, 0}, {5, -3, 10}, 600.0, m) ==
          doctest::Approx(1.1846870708133048046e-7).epsilon(1e-13));

    uint64_t draw = 0;
    for (int i = 0; i < 100; ++i) {
        const Vec3 a{20.0 * uniform_at(13, draw++) - 10.0, 20.0 * uniform_at(13, draw++) - 10.0,
                     25.0 * uniform_at(13, draw++)};
        const Vec3 b{20.0 * uniform_at(13, draw++) - 10.0, 20.0 * uniform_at(13, draw++) - 10.0,
                     25.0 * uniform_at(13, draw++)};
        const double t = 10.0 + 1200.0 * uniform_at(13, draw++);
        const double gab = greens_function(a, b, t, kBeef);
        const double gba = greens_function(b, a, t, kBeef);
        CHECK(std::abs(gab - gba) <= 1e-12 * std::max(gab, gba));
        CHECK(gab >= 0.0);
    }
    CHECK_THROWS_AS(greens_function({0, 0, 1}, {0, 0, 2}, 0.0, kBeef), std::domain_error);
}

TEST_CASE("diffusion equation residual decays at second order") {
    const Vec3 r{1.0, 0.5, 4.0};
    const Vec3 r_p{0.0, 0.0, 8.0};
    const double t = 300.0;
    double scale = 0.0;
    const double res_h = pde_residual(r, r_p, t, kBeef, 0.4, &scale);
    const double res_h2 = pde_residual(r, r_p, t, kBeef, 0.2);
    const double res_h4 = pde_residual(r, r_p, t, kBeef, 0.1);
    CHECK(res_h / scale < 1e-2);
    CHECK(res_h2 < res_h / 2.8);
    CHECK(res_h4 < res_h2 / 2.8);
}

TEST_CASE("robin boundary residual decays at second order") {
    const Vec3 r_p{2.0, -1.0, 9.0};
    const double t = 400.0;
    const double res_h = robin_residual(1.0, 0.5, r_p, t, kBeef, 0.4);
    const double res_h2 = robin_residual(1.0, 0.5, r_p, t, kBeef, 0.2);
    const double res_h4 = robin_residual(1.0, 0.5, r_p, t, kBeef, 0.1);
    CHECK(res_h2 < res_h / 2.8);
    CHECK(res_h4 < res_h2 / 2.8);
}

TEST_CASE("h_factor center zero, limits and monotonicity") {
    const double t = 900.0, s = 300.0;
    const double center = (s * 3.0 + (t - s) * (-2.0)) / t;
    CHECK(h_factor(3.0, -2.0, t, s, center, kBeef) == 0.0);
    CHECK(h_factor(3.0, -2.0, t, s, 1e4, kBeef) == doctest::Approx(1.0));
    CHECK(h_factor(3.0, -2.0, t, s, -1e4, kBeef) == doctest::Approx(-1.0));
    double prev = -2.0;
    for (double x = -30.0; x <= 30.0; x += 1.0) {
        const double h = h_factor(3.0, -2.0, t, s, x, kBeef);
        CHECK(h >= prev);
        prev = h;
    }
    CHECK_THROWS_AS(h_factor(0, 0, 100.0, 100.0, 0.0, kBeef), std::domain_error);
    CHECK_THROWS_AS(h_factor(0, 0, 100.0, 0.0, 0.0, kBeef), std::domain_error);
}

TEST_CASE("f1 equals the lateral Green's product integrated over the slab") {
    // 2-D tensor Gauss quadrature of the product of lateral Gaussian factors,
    // assembled without the h/erf shortcut.
    const Vec2 rho_d{-10.0, 3.0};
    const Vec2 rho_s{4.0, -6.0};
    const double T = 900.0, s = 320.0;
    const double x1 = -1.5, x2 = 1.5, y1 = -3.0, y2 = 1.0;
    const double Dc = kBeef.D * kBeef.c;
    const double t1 = T - s, t2 = s;

    const auto& rule = gauss_legendre(48);
    double quad = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = map_to_interval(x1, x2, rule.nodes[i]);
        const double wx = interval_weight(x1, x2, rule.weights[i]);
        for (size_t j = 0; j < rule.nodes.size(); ++j) {
            const double y = map_to_interval(y1, y2, rule.nodes[j]);
            const double wy = interval_weight(y1, y2, rule.weights[j]);
            const double d2_d = (rho_d.x - x) * (rho_d.x - x) + (rho_d.y - y) * (rho_d.y - y);
            const double d2_s = (x - rho_s.x) * (x - rho_s.x) + (y - rho_s.y) * (y - rho_s.y);
            quad += wx * wy * std::exp(-d2_d / (4.0 * Dc * t1)) * std::exp(-d2_s / (4.0 * Dc * t2));
        }
    }
    const double pi3 = std::numbers::pi * std::numbers::pi * std::numbers::pi;
    const double oracle = std::exp(-kBeef.mu_a * kBeef.c * T) * quad /
                          (64.0 * pi3 * kBeef.D * kBeef.D * kBeef.D * kBeef.c *
                           std::pow(t1 * t2, 1.5));
    const double got = f1(rho_d, rho_s, T, s, x1, x2, y1, y2, kBeef);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("f1 degenerate slab, nonnegativity and translation invariance") {
    CHECK(f1({-10, 3}, {4, -6}, 900.0, 320.0, 1.0, 1.0, -3.0, 1.0, kBeef) == 0.0);
    uint64_t draw = 0;
    for (int i = 0; i < 50; ++i) {
        auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform_at(17, draw++); };
        const double T = u(100.0, 1200.0);
        const double s = u(0.01, 0.99) * T;
        const double x1 = u(-5, 5), x2 = x1 + u(0, 5);
        const double y1 = u(-5, 5), y2 = y1 + u(0, 5);
        const Vec2 d{u(-15, 15), u(-15, 15)}, sc{u(-15, 15), u(-15, 15)};
        const double base = f1(d, sc, T, s, x1, x2, y1, y2, kBeef);
        CHECK(base >= 0.0);
        const double sx = u(-8, 8), sy = u(-8, 8);
        const double shifted = f1({d.x + sx, d.y + sy}, {sc.x + sx, sc.y + sy}, T, s, x1 + sx,
                                  x2 + sx, y1 + sy, y2 + sy, kBeef);
        CHECK(shifted == doctest::Approx(base).epsilon(1e-12));
    }
    CHECK_THROWS_AS(f1({0, 0}, {1, 1}, 100.0, 50.0, 2.0, 1.0, 0.0, 1.0, kBeef),
                    std::domain_error);
}

TEST_CASE("f2 empty interval, monotonicity and self-convergence") {
    CHECK(f2(1000.0, 400.0, 3.0, 3.0, kBeef) == 0.0);
    const double narrow = f2(1000.0, 400.0, 9.9, 12.0, kBeef);
    const double wide = f2(1000.0, 400.0, 0.0, 60.0, kBeef);
    CHECK(narrow >= 0.0);
    CHECK(wide >= narrow);

    const double coarse = f2(1000.0, 400.0, 9.9, 12.0, kBeef, 64);
    const double fine = f2(1000.0, 400.0, 9.9, 12.0, kBeef, 512);
    CHECK(std::abs(coarse - fine) <= 1e-8 * std::abs(fine));
    CHECK_THROWS_AS(f2(1000.0, 400.0, -1.0, 2.0, kBeef), std::domain_error);
}

TEST_CASE("irf_q identities and box-pulse convolution") {
    const auto d = InstrumentResponse::delta();
    CHECK(irf_q(d, d).is_delta());

    // box pulse on [0, 100] with an explicit trailing zero so the sampled
    // profile is continuous
    std::vector<double> box_samples(12, 1.0);
    box_samples.back() = 0.0;
    auto box = InstrumentResponse::sampled(10.0, box_samples);
    const auto q_delta = irf_q(d, box);
    REQUIRE(!q_delta.is_delta());
    CHECK(q_delta.samples == box.samples);

    // two boxes convolve to a triangular profile, exactly 10k on the rise
    const auto tri = irf_q(box, box);
    REQUIRE(tri.samples.size() == 23);
    CHECK(tri.samples[0] == 0.0);
    for (int k = 1; k <= 10; ++k)
        CHECK(tri.samples[k] == doctest::Approx(10.0 * k).epsilon(1e-12));

    // refined-grid oracle: the same piecewise-linear profile resampled onto
    // a 100x finer grid, trapezoid there
    const double fine_dt = 0.1;
    std::vector<double> fine;
    for (size_t j = 0; j <= 1100; ++j) fine.push_back(box.value_at(j * fine_dt));
    auto fine_box = InstrumentResponse::sampled(fine_dt, fine);
    const auto tri_fine = irf_q(fine_box, fine_box);
    for (int k = 1; k <= 19; ++k) {
        const double t = 10.0 * k;
        const auto fine_idx = static_cast<size_t>(std::lround(t / fine_dt));
        const double expected = tri_fine.samples[fine_idx];
        CHECK(tri.samples[k] == doctest::Approx(expected).epsilon(0.01));
    }

    auto other = InstrumentResponse::sampled(7.0, std::vector<double>(5, 1.0));
    CHECK_THROWS(irf_q(box, other));
}

TEST_CASE("capital_Q markers and closed forms") {
    const auto q_delta = InstrumentResponse::delta();
    const auto marker = capital_Q(100.0, q_delta, 0.0, kBeef);
    CHECK(marker.is_delta);
    CHECK(marker.value == kBeef.D);

    // tau = 600 ps with a delta q: Q(t) = (D/tau) exp(-t/tau)
    const auto qv = capital_Q(450.0, q_delta, 600.0, kBeef);
    CHECK(!qv.is_delta);
    CHECK(qv.value == doctest::Approx(0.00028524550286293158644).epsilon(1e-13));

    CHECK_THROWS_AS(capital_Q(100.0, q_delta, -1.0, kBeef), std::domain_error);
}

TEST_CASE("capital_Q for a sampled q against a refined-grid oracle") {
    // gaussian-ish pulse sampled at 10 ps
    std::vector<double> samples;
    for (int j = 0; j <= 30; ++j) {
        const double t = 10.0 * j;
        samples.push_back(std::exp(-(t - 80.0) * (t - 80.0) / (2.0 * 30.0 * 30.0)));
    }
    const auto q = InstrumentResponse::sampled(10.0, samples);
    const double tau = 600.0;

    const double t_eval = 250.0;
    const double got = capital_Q(t_eval, q, tau, kBeef).value;

    // trapezoid on a 64x finer grid with linear interpolation of q
    const double fine_dt = 10.0 / 64.0;
    const auto n = static_cast<size_t>(t_eval / fine_dt);
    double acc = 0.0;
    auto integrand = [&](double tp) { return std::exp(-tp / tau) * q.value_at(t_eval - tp); };
    for (size_t j = 0; j < n; ++j)
        acc += 0.5 * fine_dt * (integrand(j * fine_dt) + integrand((j + 1) * fine_dt));
    acc += 0.5 * (t_eval - n * fine_dt) * (integrand(n * fine_dt) + integrand(t_eval));
    const double oracle = kBeef.D / tau * acc;
    CHECK(got == doctest::Approx(oracle).epsilon(0.005));
}

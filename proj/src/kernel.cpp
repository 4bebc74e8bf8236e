#include "fdot/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fdot/quadrature.hpp"
#include "fdot/special.hpp"

namespace fdot {

double g_axial(double z, double z_p, double t, const OpticalMedium& medium) {
    if (t <= 0.0) throw std::domain_error("g_axial: t must be positive");
    if (z < 0.0 || z_p < 0.0) throw std::domain_error("g_axial: depths must be nonnegative");
    const double Dct = medium.D * medium.c * t;
    const double four_Dct = 4.0 * Dct;
    const double sum = z + z_p;
    const double diff = z - z_p;
    const double gauss_sum = std::exp(-sum * sum / four_Dct);
    const double gauss_diff = std::exp(-diff * diff / four_Dct);
    const double arg = (sum + 2.0 * medium.beta * Dct) / std::sqrt(four_Dct);
    const double boundary =
        2.0 * medium.beta * std::sqrt(std::numbers::pi * Dct) * erfcx(arg) * gauss_sum;
    return gauss_diff + gauss_sum - boundary;
}

double greens_function(const Vec3& r, const Vec3& r_p, double t, const OpticalMedium& medium) {
    if (t <= 0.0) throw std::domain_error("greens_function: t must be positive");
    const double Dct = medium.D * medium.c * t;
    const double dx = r.x - r_p.x;
    const double dy = r.y - r_p.y;
    const double lateral = std::exp(-(dx * dx + dy * dy) / (4.0 * Dct));
    const double prefactor =
        medium.c * std::pow(4.0 * std::numbers::pi * Dct, -1.5) * std::exp(-medium.mu_a * medium.c * t);
    return prefactor * lateral * g_axial(r.z, r_p.z, t, medium);
}

double h_factor(double x_d, double x_s, double t, double s, double x,
                const OpticalMedium& medium) {
    if (!(s > 0.0 && s < t)) throw std::domain_error("h_factor: s must lie in (0, t)");
    const double scale = std::sqrt(t / (4.0 * medium.D * medium.c * (t - s) * s));
    const double center = (s * x_d + (t - s) * x_s) / t;
    return std::erf(scale * (x - center));
}

double f1(const Vec2& rho_d, const Vec2& rho_s, double t, double s,
          double x1, double x2, double y1, double y2, const OpticalMedium& medium) {
    if (!(s > 0.0 && s < t)) throw std::domain_error("f1: s must lie in (0, t)");
    if (x1 > x2 || y1 > y2) throw std::domain_error("f1: inverted slab bounds");
    const double Dc = medium.D * medium.c;
    const double dx = rho_d.x - rho_s.x;
    const double dy = rho_d.y - rho_s.y;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double prefactor = std::exp(-medium.mu_a * medium.c * t) /
                             (64.0 * pi2 * medium.D * medium.D * t * std::sqrt((t - s) * s));
    const double lateral = std::exp(-(dx * dx + dy * dy) / (4.0 * Dc * t));
    const double hx = h_factor(rho_d.x, rho_s.x, t, s, x2, medium) -
                      h_factor(rho_d.x, rho_s.x, t, s, x1, medium);
    const double hy = h_factor(rho_d.y, rho_s.y, t, s, y2, medium) -
                      h_factor(rho_d.y, rho_s.y, t, s, y1, medium);
    return prefactor * lateral * hx * hy;
}

double f2(double t, double s, double z1, double z2, const OpticalMedium& medium,
          int quad_order) {
    if (!(s > 0.0 && s < t)) throw std::domain_error("f2: s must lie in (0, t)");
    if (z1 < 0.0) throw std::domain_error("f2: target must lie in the half-space");
    if (z1 > z2) throw std::domain_error("f2: inverted depth bounds");
    if (z1 == z2) return 0.0;
    const auto& rule = gauss_legendre(quad_order);
    double acc = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double z = map_to_interval(z1, z2, rule.nodes[i]);
        const double w = interval_weight(z1, z2, rule.weights[i]);
        acc += w * g_axial(0.0, z, t - s, medium) * g_axial(z, 0.0, s, medium);
    }
    return acc;
}

}  // namespace fdot

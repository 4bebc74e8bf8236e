#pragma once

#include "fdot/geometry.hpp"
#include "fdot/medium.hpp"

namespace fdot {

// Axial factor of the half-space Green's function with the Robin boundary,
//   g(z, z'; t) = exp(-(z-z')^2/4Dct) + exp(-(z+z')^2/4Dct)
//               - 2 beta sqrt(pi D c t) erfcx((z+z'+2 beta D c t)/sqrt(4Dct))
//                 * exp(-(z+z')^2/4Dct).
// The boundary term uses the scaled complementary error function so it stays
// finite for deep targets and long times, where exp * erfc overflows.
double g_axial(double z, double z_p, double t, const OpticalMedium& medium);

// Full Green's function of (1/c d/dt - D Lap + mu_a) with -dG/dz + beta G = 0
// at z = 0. Units 1/mm^3.
double greens_function(const Vec3& r, const Vec3& r_p, double t, const OpticalMedium& medium);

// Slab factor h = erf(sqrt(t / (4Dc (t-s) s)) * (x - (s x_d + (t-s) x_s)/t)).
double h_factor(double x_d, double x_s, double t, double s, double x,
                const OpticalMedium& medium);

// Lateral factor of the cuboid emission integrand: the product of the two
// slab h-differences with the Gaussian prefactor
//   exp(-mu_a c t) / (4^3 pi^2 D^2 t sqrt((t-s) s)) * exp(-|rho_d-rho_s|^2/4Dct).
double f1(const Vec2& rho_d, const Vec2& rho_s, double t, double s,
          double x1, double x2, double y1, double y2, const OpticalMedium& medium);

// Axial factor f2(t, s; z1, z2) = int_{z1}^{z2} g(0, z'; t-s) g(z', 0; s) dz'
// by Gauss-Legendre quadrature on [z1, z2].
double f2(double t, double s, double z1, double z2, const OpticalMedium& medium,
          int quad_order = 64);

}  // namespace fdot

#pragma once

namespace fdot {

// Vacuum light speed in mm/ps. Lengths are mm, times ps throughout.
inline constexpr double kLightSpeedVacuum = 0.299792458;

// Homogeneous optical medium filling the half-space z > 0.
// D, c and beta are derived; construct through derive_medium unless a test
// needs explicit control over the derived fields.
struct OpticalMedium {
    double mu_s_prime = 0.0;  // reduced scattering [1/mm]
    double mu_a = 0.0;        // absorption [1/mm]
    double n_rel = 1.0;       // refractive index relative to outside
    double D = 0.0;           // diffusion coefficient, 1/(3 mu_s') [mm]
    double c = 0.0;           // light speed in the medium [mm/ps]
    double beta = 0.0;        // Robin boundary coefficient [1/mm]
};

// Unpolarized Fresnel reflectance for light hitting the boundary from inside
// (index n_rel) at incidence cosine mu. Returns 1 beyond the critical angle.
double fresnel_reflectance(double mu, double n_rel);

// Robin coefficient
//   beta = 1/(2D) * (1 - 2 * int_0^1 R(mu) mu dmu) / (1 + int_0^1 R(mu) mu^2 dmu).
// The moment integrals are split at the critical cosine; above it the
// integrand is mapped onto a smooth variable so Gauss-Legendre converges to
// machine precision. For n_rel = 1 this reduces to 1/(2D) exactly.
double robin_coefficient(double n_rel, double D);

OpticalMedium derive_medium(double mu_s_prime, double mu_a, double n_rel);

}  // namespace fdot

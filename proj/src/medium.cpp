#include "fdot/medium.hpp"

#include <cmath>
#include <stdexcept>

#include "fdot/quadrature.hpp"

namespace fdot {

double fresnel_reflectance(double mu, double n_rel) {
    if (!(mu >= 0.0 && mu <= 1.0))
        throw std::domain_error("fresnel_reflectance: incidence cosine outside [0,1]");
    if (n_rel < 1.0)
        throw std::invalid_argument("fresnel_reflectance: n_rel must be >= 1");
    if (n_rel == 1.0) return 0.0;  // matched index: no interface
    const double sin2_t = n_rel * n_rel * (1.0 - mu * mu);
    if (sin2_t >= 1.0) return 1.0;  // total internal reflection
    const double mu_t = std::sqrt(1.0 - sin2_t);
    const double rs = (n_rel * mu - mu_t) / (n_rel * mu + mu_t);
    const double rp = (mu - n_rel * mu_t) / (mu + n_rel * mu_t);
    return 0.5 * (rs * rs + rp * rp);
}

double robin_coefficient(double n_rel, double D) {
    if (D <= 0.0) throw std::invalid_argument("robin_coefficient: D must be positive");
    if (n_rel < 1.0) throw std::invalid_argument("robin_coefficient: n_rel must be >= 1");
    if (n_rel == 1.0) return 1.0 / (2.0 * D);  // R vanishes identically

    // Below the critical cosine R = 1, so those pieces are analytic.
    const double mu_c2 = 1.0 - 1.0 / (n_rel * n_rel);
    double first_moment = mu_c2 / 2.0;
    double second_moment = std::pow(mu_c2, 1.5) / 3.0;

    // Above it substitute v = cos(theta_t): mu = sqrt(1 - (1 - v^2)/n^2),
    // mu dmu = v dv / n^2. R(mu(v)) is smooth in v on [0, 1].
    const auto& rule = gauss_legendre(64);
    const double inv_n2 = 1.0 / (n_rel * n_rel);
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = map_to_interval(0.0, 1.0, rule.nodes[i]);
        const double w = interval_weight(0.0, 1.0, rule.weights[i]);
        const double mu = std::sqrt(1.0 - (1.0 - v * v) * inv_n2);
        const double r = fresnel_reflectance(mu, n_rel);
        first_moment += w * r * v * inv_n2;
        second_moment += w * r * v * mu * inv_n2;
    }

    const double numerator = 1.0 - 2.0 * first_moment;
    if (numerator <= 0.0)
        throw std::invalid_argument("robin_coefficient: reflectance moments leave a non-positive numerator");
    return numerator / (1.0 + second_moment) / (2.0 * D);
}

OpticalMedium derive_medium(double mu_s_prime, double mu_a, double n_rel) {
    if (mu_s_prime <= 0.0)
        throw std::invalid_argument("derive_medium: mu_s_prime must be positive");
    if (mu_a < 0.0) throw std::invalid_argument("derive_medium: mu_a must be nonnegative");
    if (n_rel < 1.0) throw std::invalid_argument("derive_medium: n_rel must be >= 1");
    OpticalMedium m;
    m.mu_s_prime = mu_s_prime;
    m.mu_a = mu_a;
    m.n_rel = n_rel;
    m.D = 1.0 / (3.0 * mu_s_prime);
    m.c = kLightSpeedVacuum / n_rel;
    m.beta = robin_coefficient(n_rel, m.D);
    return m;
}

}  // namespace fdot

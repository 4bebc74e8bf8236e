#include "fdot/special.hpp"

#include <cmath>
#include <limits>

namespace fdot {

namespace {

// Laplace continued fraction
//   erfcx(x) = 1/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
// evaluated with the modified Lentz algorithm. Converges to machine
// precision in a few dozen terms for the large-x branch below.
double erfcx_continued_fraction(double x) {
    constexpr double sqrt_pi = 1.7724538509055160273;
    constexpr double tiny = 1e-300;
    double f = x, c = x, d = 0.0;
    for (int k = 1; k < 300; ++k) {
        const double a = 0.5 * k;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 4e-17) break;
    }
    return 1.0 / (sqrt_pi * f);
}

// exp(x^2) * y with the rounding error of x*x compensated through fma, so
// the product does not lose x^2 * eps of relative accuracy.
double exp_x2_times(double x, double y) {
    const double x2 = x * x;
    const double x2_err = std::fma(x, x, -x2);
    return std::exp(x2) * (1.0 + x2_err) * y;
}

}  // namespace

double erfcx(double x) {
    if (std::isnan(x)) return x;
    if (x >= 0.0) {
        // exp(x^2) stays below overflow for x < 26.6; past that the
        // continued fraction is already far in its asymptotic regime.
        if (x > 25.0) return erfcx_continued_fraction(x);
        return exp_x2_times(x, std::erfc(x));
    }
    // erfcx(-x) = 2 exp(x^2) - erfcx(x); grows like exp(x^2) and overflows
    // past x ~ -26.6, which is the function's own range limit.
    if (x < -26.7) return std::numeric_limits<double>::infinity();
    return exp_x2_times(x, 2.0) - erfcx(-x);
}

}  // namespace fdot

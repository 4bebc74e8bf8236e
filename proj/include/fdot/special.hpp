#pragma once

// Error-function family used by the half-space kernels.
//
// erf/erfc come from libm (double-precision, ~1 ulp on glibc); the test suite
// validates them against frozen arbitrary-precision references. erfcx is the
// scaled complementary error function erfcx(x) = exp(x^2) erfc(x), which libm
// does not provide. It is evaluated directly for moderate x and via the
// Laplace continued fraction for large x, so it stays finite where the naive
// exp(x^2)*erfc(x) product would overflow.

namespace fdot {

// Relative accuracy better than 1e-14 over the full double range.
double erfcx(double x);

}  // namespace fdot

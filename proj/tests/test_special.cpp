#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fdot/special.hpp"

using fdot::erfcx;

namespace {

// References computed with mpmath at 50 digits.
struct Ref {
    double x;
    double value;
};

constexpr Ref kErfcxRefs[] = {
    {1e-9, 0.9999999988716208339},
    {0.01, 0.98881546104634251056},
    {0.1, 0.89645697996912664193},
    {0.5, 0.61569034419292587487},
    {1.0, 0.42758357615580700441},
    {2.0, 0.25539567631050574387},
    {3.5, 0.1552936556088942974},
    {5.0, 0.11070463773306862637},
    {8.0, 0.069985166200880927723},
    {12.0, 0.04685422101489376262},
    {20.0, 0.028174348741051319319},
    {26.5, 0.021275046685371105955},
    {50.0, 0.0112815362653237725},
    {100.0, 0.0056416137829894329036},
    {1e4, 5.6418958072680841152e-5},
    {1e8, 5.6418958354775625874e-9},
    {-0.5, 1.9523604891825570933},
    {-1.0, 5.0089800807622834663},
    {-2.0, 108.94090438997797241},
    {-5.0, 144009798674.66104041},
};

constexpr Ref kErfRefs[] = {
    {0.1, 0.1124629160182848922},
    {0.75, 0.7111556336535151316},
    {1.5, 0.96610514647531072707},
    {3.0, 0.99997790950300141456},
    {-2.2, -0.99813715370201810856},
};

constexpr Ref kErfcRefs[] = {
    {0.1, 0.8875370839817151078},
    {0.75, 0.2888443663464848684},
    {1.5, 0.033894853524689272933},
    {3.0, 2.2090496998585441373e-5},
    {-2.2, 1.9981371537020181086},
    {6.0, 2.1519736712498913117e-17},
    {25.0, 8.300172571196522752e-274},
};

}  // namespace

TEST_CASE("erfcx matches arbitrary-precision references to 1e-14") {
    for (const auto& ref : kErfcxRefs) {
        const double got = erfcx(ref.x);
        CHECK(std::abs(got - ref.value) <= 1e-14 * std::abs(ref.value));
    }
}

TEST_CASE("libm erf/erfc meet the toolkit accuracy requirement") {
    for (const auto& ref : kErfRefs)
        CHECK(std::abs(std::erf(ref.x) - ref.value) <= 1e-14 * std::abs(ref.value));
    for (const auto& ref : kErfcRefs)
        CHECK(std::abs(std::erfc(ref.x) - ref.value) <= 1e-14 * std::abs(ref.value));
}

TEST_CASE("erfcx stays finite where exp*erfc overflows") {
    // arguments of the boundary term for z+z' up to 1e3 mm and t up to 1e6 ps
    for (double x : {30.0, 100.0, 1e3, 1e6, 1e9}) {
        const double v = erfcx(x);
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
        // asymptotically 1/(sqrt(pi) x)
        CHECK(v < 1.0 / x);
    }
    CHECK(erfcx(0.0) == 1.0);
    CHECK(std::isinf(erfcx(-30.0)));
    CHECK(std::isnan(erfcx(std::numeric_limits<double>::quiet_NaN())));
}

TEST_CASE("erfcx is continuous across the algorithm switch at x = 25") {
    const double below = erfcx(25.0 - 1e-12);
    const double above = erfcx(25.0 + 1e-12);
    CHECK(std::abs(below - above) <= 1e-13 * below);
    CHECK(erfcx(25.0) == doctest::Approx(0.022549572432641358944).epsilon(1e-14));
}

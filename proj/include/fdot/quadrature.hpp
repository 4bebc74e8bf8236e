#pragma once

#include <vector>

namespace fdot {

// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached rule of the given order (thread-safe; references stay valid).
const QuadratureRule& gauss_legendre(int order);

// Affine map of a reference node/weight pair to [a, b].
inline double map_to_interval(double a, double b, double node) {
    return 0.5 * (b - a) * node + 0.5 * (a + b);
}
inline double interval_weight(double a, double b, double weight) {
    return 0.5 * (b - a) * weight;
}

}  // namespace fdot

#include "fdot/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fdot {

namespace {

// Newton iteration on the Legendre recurrence (nodes are the roots of P_n).
QuadratureRule build_rule(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p_cur = 1.0, p_prev = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p_old = p_prev;
                p_prev = p_cur;
                p_cur = ((2 * j + 1) * x * p_prev - j * p_old) / (j + 1);
            }
            derivative = n * (x * p_cur - p_prev) / (x * x - 1.0);
            const double dx = p_cur / derivative;
            x -= dx;
            if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    static std::map<int, QuadratureRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
    return it->second;
}

}  // namespace fdot

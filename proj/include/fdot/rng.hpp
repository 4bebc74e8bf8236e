#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Counter-indexed SplitMix64 (Steele, Lea & Flood 2014). Draw k of stream
// `seed` is a pure function of (seed, k), so noise generation is reproducible
// and order-independent regardless of how work is scheduled.

namespace fdot {

inline uint64_t splitmix64_at(uint64_t seed, uint64_t k) {
    uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform draws on (0,1] and [0,1) from the top 53 bits.
inline double uniform_open_at(uint64_t seed, uint64_t k) {
    return ((splitmix64_at(seed, k) >> 11) + 1) * 0x1.0p-53;
}
inline double uniform_at(uint64_t seed, uint64_t k) {
    return (splitmix64_at(seed, k) >> 11) * 0x1.0p-53;
}

// Standard normal draw i via Box-Muller; consumes counter slots 2i and 2i+1.
inline double gaussian_at(uint64_t seed, uint64_t i) {
    const double u1 = uniform_open_at(seed, 2 * i);
    const double u2 = uniform_at(seed, 2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace fdot

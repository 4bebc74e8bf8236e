#include "fdot/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdot/rng.hpp"

namespace fdot {

VoxelField voxelize_ellipsoid(const EllipsoidTarget& target, double spacing) {
    const double min_axis = std::min({target.semiaxes.x, target.semiaxes.y, target.semiaxes.z});
    if (min_axis <= 0.0) throw std::invalid_argument("voxelize_ellipsoid: semiaxes must be positive");
    if (spacing <= 0.0) throw std::invalid_argument("voxelize_ellipsoid: spacing must be positive");
    if (spacing >= min_axis)
        throw std::invalid_argument("voxelize_ellipsoid: spacing too coarse for the smallest semiaxis");
    if (target.center.z - target.semiaxes.z <= 0.0)
        throw std::invalid_argument("voxelize_ellipsoid: ellipsoid must lie strictly inside z > 0");

    VoxelField field;
    field.spacing = {spacing, spacing, spacing};
    field.nx = static_cast<int>(std::ceil(2.0 * target.semiaxes.x / spacing));
    field.ny = static_cast<int>(std::ceil(2.0 * target.semiaxes.y / spacing));
    field.nz = static_cast<int>(std::ceil(2.0 * target.semiaxes.z / spacing));
    field.origin = {target.center.x - 0.5 * field.nx * spacing,
                    target.center.y - 0.5 * field.ny * spacing,
                    target.center.z - 0.5 * field.nz * spacing};
    field.values.assign(static_cast<size_t>(field.nx) * field.ny * field.nz, 0.0);
    for (int k = 0; k < field.nz; ++k)
        for (int j = 0; j < field.ny; ++j)
            for (int i = 0; i < field.nx; ++i) {
                const Vec3 p = field.center(i, j, k);
                const double ex = (p.x - target.center.x) / target.semiaxes.x;
                const double ey = (p.y - target.center.y) / target.semiaxes.y;
                const double ez = (p.z - target.center.z) / target.semiaxes.z;
                if (ex * ex + ey * ey + ez * ez <= 1.0)
                    field.values[field.flat_index(i, j, k)] = target.n_value;
            }
    field.validate();
    return field;
}

std::vector<SourceDetectorPair> layout_paper32() {
    const double off = 10.0 * std::sqrt(3.0);
    const Vec2 anchors[8] = {{-10.0, 10.0}, {-10.0, 0.0}, {-10.0, -10.0}, {0.0, -10.0},
                             {10.0, -10.0}, {10.0, 0.0},  {10.0, 10.0},   {0.0, 10.0}};
    std::vector<SourceDetectorPair> pairs;
    pairs.reserve(32);
    for (int j = 0; j < 8; ++j) {
        const auto [xi, zeta] = anchors[j];
        // Four pairs per anchor: source offset +-10 sqrt(3) in y, detector
        // offset -+10 in x. Every pair is 20 mm apart.
        pairs.push_back({{xi, zeta + off}, {xi - 10.0, zeta}, 4 * j + 1});
        pairs.push_back({{xi, zeta + off}, {xi + 10.0, zeta}, 4 * j + 2});
        pairs.push_back({{xi, zeta - off}, {xi - 10.0, zeta}, 4 * j + 3});
        pairs.push_back({{xi, zeta - off}, {xi + 10.0, zeta}, 4 * j + 4});
    }
    return pairs;
}

std::vector<SourceDetectorPair> layout_beef16() {
    const double r3 = 10.0 * std::sqrt(3.0);
    const std::vector<SourceDetectorPair> pairs = {
        {{-5.0 - r3, 0.0}, {-5.0, 10.0}, 1},   {{-5.0 + r3, 0.0}, {-5.0, 10.0}, 2},
        {{-5.0 - r3, 5.0}, {-5.0, 15.0}, 3},   {{-5.0 + r3, 5.0}, {-5.0, 15.0}, 4},
        {{-r3, 0.0}, {0.0, 10.0}, 5},          {{-r3, 5.0}, {0.0, 15.0}, 6},
        {{5.0 - r3, 5.0}, {5.0, -5.0}, 7},     {{5.0 - r3, 5.0}, {5.0, 15.0}, 8},
        {{5.0 - r3, 0.0}, {5.0, 10.0}, 9},     {{5.0 - r3, -5.0}, {5.0, 5.0}, 10},
        {{-r3, -5.0}, {0.0, 5.0}, 11},         {{-10.0 + r3, 0.0}, {-10.0, 10.0}, 12},
        {{-15.0 + r3, 0.0}, {-15.0, 10.0}, 13}, {{-15.0 + r3, 5.0}, {-15.0, -5.0}, 14},
        {{-15.0 + r3, 5.0}, {-15.0, 15.0}, 15}, {{-10.0 + r3, 5.0}, {-10.0, 15.0}, 16},
    };
    return pairs;
}

MeasurementSet add_noise(const MeasurementSet& clean, const NoiseSpec& spec) {
    if (spec.level < 0.0) throw std::invalid_argument("add_noise: negative noise level");
    clean.validate();
    if (spec.level == 0.0) return clean;
    MeasurementSet noisy = clean;
    uint64_t sample_index = 0;
    for (auto& series : noisy.values)
        for (auto& v : series) {
            const double eps = gaussian_at(spec.seed, sample_index++);
            v = std::max(0.0, v * (1.0 + spec.level * eps));
        }
    return noisy;
}

}  // namespace fdot

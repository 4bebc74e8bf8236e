#pragma once

#include <cstdint>
#include <vector>

#include "fdot/forward.hpp"
#include "fdot/geometry.hpp"

namespace fdot {

struct EllipsoidTarget {
    Vec3 center;
    Vec3 semiaxes;
    double n_value = 0.0;  // fluorophore density inside [1/mm]
};

// Multiplicative Gaussian noise U -> U (1 + level * eps), eps ~ N(0,1) drawn
// per sample from the seeded counter generator.
struct NoiseSpec {
    double level = 0.0;
    uint64_t seed = 0;
};

// Voxel centers inside the ellipsoid get n_value. The grid is centered on the
// target; spacing must resolve the smallest semiaxis.
VoxelField voxelize_ellipsoid(const EllipsoidTarget& target, double spacing);

// Source-detector arrangements used by the two experiments: 32 pairs built
// from eight anchor points (four per anchor, all at 20 mm separation), and
// the fixed list of 16 pairs from the beef measurement. All points on z = 0.
std::vector<SourceDetectorPair> layout_paper32();
std::vector<SourceDetectorPair> layout_beef16();

MeasurementSet add_noise(const MeasurementSet& clean, const NoiseSpec& spec);

}  // namespace fdot

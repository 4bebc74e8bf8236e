#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fdot {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Axis-aligned cuboid target with constant fluorophore density M inside.
struct Cuboid {
    double x1 = 0.0, x2 = 0.0;
    double y1 = 0.0, y2 = 0.0;
    double z1 = 0.0, z2 = 0.0;  // 0 < z1 < z2: strictly inside the half-space
    double M = 0.0;             // amplitude [1/mm]

    double volume() const { return (x2 - x1) * (y2 - y1) * (z2 - z1); }
    void validate() const {
        if (!(x1 < x2 && y1 < y2)) throw std::domain_error("Cuboid: inverted lateral bounds");
        if (!(0.0 < z1 && z1 < z2)) throw std::domain_error("Cuboid: z bounds must satisfy 0 < z1 < z2");
        if (M < 0.0) throw std::domain_error("Cuboid: amplitude must be nonnegative");
    }
};

// Source and detector positions on the boundary plane z = 0.
struct SourceDetectorPair {
    Vec2 source;
    Vec2 detector;
    int index = 0;  // ordinal in acquisition order (1-based)
};

// Uniform time window: samples at t0 + (k-1) dt, k = 1..n_t.
struct TimeWindow {
    double t0 = 0.0;  // ps
    double dt = 0.0;  // ps
    int n_t = 0;
    int k0 = 0;       // peak bin of the underlying series (1-based)

    double time_at(int k) const { return t0 + (k - 1) * dt; }  // k is 1-based
};

// Rectangular region of interest on the boundary.
struct Region {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

// Regular voxel grid of fluorophore density. Voxel (i,j,k) is centered at
// origin + (i+1/2, j+1/2, k+1/2) * spacing; values are stored x-fastest.
struct VoxelField {
    Vec3 origin;
    Vec3 spacing;
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> values;  // [1/mm], size nx*ny*nz

    size_t flat_index(int i, int j, int k) const {
        return static_cast<size_t>(i) + static_cast<size_t>(nx) * (j + static_cast<size_t>(ny) * k);
    }
    double voxel_volume() const { return spacing.x * spacing.y * spacing.z; }
    Vec3 center(int i, int j, int k) const {
        return {origin.x + (i + 0.5) * spacing.x,
                origin.y + (j + 0.5) * spacing.y,
                origin.z + (k + 0.5) * spacing.z};
    }
    void validate() const {
        if (spacing.x <= 0.0 || spacing.y <= 0.0 || spacing.z <= 0.0)
            throw std::domain_error("VoxelField: spacing must be positive");
        if (origin.z < 0.0)
            throw std::domain_error("VoxelField: voxels must lie in the half-space z > 0");
        if (values.size() != static_cast<size_t>(nx) * ny * nz)
            throw std::domain_error("VoxelField: value count does not match dims");
    }
};

}  // namespace fdot

#pragma once

#include <map>
#include <variant>
#include <vector>

#include "fdot/geometry.hpp"
#include "fdot/irf.hpp"
#include "fdot/kernel.hpp"
#include "fdot/medium.hpp"

namespace fdot {

struct QuadConfig {
    int time_nodes = 48;      // inner t' integral over (0, t-s)
    int z_nodes = 64;         // f2 depth integral
    int outer_nodes = 48;     // outer s integral when Q is a smooth closed form
    double check_tol = 1e-6;  // relative tolerance for node-doubling self checks
};

// Per-pair emission time series plus the window metadata describing where the
// samples sit on the acquisition grid. A freshly simulated (or ingested) set
// is "full-grid": every window starts at t0 = 0 and spans the whole series.
struct MeasurementSet {
    std::vector<SourceDetectorPair> pairs;
    std::vector<TimeWindow> windows;
    std::vector<std::vector<double>> values;
    OpticalMedium medium;
    InstrumentResponse irf;

    bool full_grid() const;
    void validate() const;
};

// Emission forward operator for a cuboid target, assembled from the f1/f2
// factorization. Batch evaluations share the f2 depth integrals across pairs,
// which is what makes the fitting stages cheap: f2 depends only on the time
// arguments and the cuboid depth interval, not on the pair.
class CuboidEmissionModel {
public:
    CuboidEmissionModel(const OpticalMedium& medium, const InstrumentResponse& irf,
                        const QuadConfig& quad = {});

    double value(const Cuboid& cuboid, const SourceDetectorPair& pair, double t) const;

    // Values at every window sample, pair-major. Order matches the residual
    // layout of the inversion stages.
    std::vector<double> evaluate_windows(const Cuboid& cuboid,
                                         const std::vector<SourceDetectorPair>& pairs,
                                         const std::vector<TimeWindow>& windows) const;

    const OpticalMedium& medium() const { return medium_; }
    const QuadConfig& quad() const { return quad_; }

private:
    using F2Cache = std::map<double, std::vector<double>>;  // T -> f2 at the GL nodes

    double inner_integral(const Cuboid& cuboid, const SourceDetectorPair& pair, double T,
                          F2Cache& cache, int time_nodes) const;
    double value_cached(const Cuboid& cuboid, const SourceDetectorPair& pair, double t,
                        F2Cache& cache, int time_nodes) const;

    OpticalMedium medium_;
    InstrumentResponse irf_;
    QKernel q_kernel_;
    QuadConfig quad_;
};

// Factorized cuboid emission U_m at a single time.
double forward_cuboid(const Cuboid& cuboid, const SourceDetectorPair& pair, double t,
                      const OpticalMedium& medium, const InstrumentResponse& irf,
                      const QuadConfig& quad = {});

// Same value with a node-doubling self check attached.
struct CheckedValue {
    double value = 0.0;
    double rel_change = 0.0;  // |value - refined| / max(|refined|, tiny)
    bool converged = true;
};
CheckedValue forward_cuboid_checked(const Cuboid& cuboid, const SourceDetectorPair& pair,
                                    double t, const OpticalMedium& medium,
                                    const InstrumentResponse& irf, const QuadConfig& quad = {});

// Brute-force emission from an arbitrary voxel field: midpoint rule in space,
// Gauss-Legendre in time. Serves as the independent oracle for the factorized
// operator and as the simulator for non-cuboid targets.
double forward_voxelized(const VoxelField& field, const SourceDetectorPair& pair, double t,
                         const OpticalMedium& medium, const InstrumentResponse& irf,
                         const QuadConfig& quad = {}, int threads = 1);

// Noise-free time series for every pair on the grid (k-1)*dt, k = 1..n_bins.
// The per-pair peak bin is recorded in the window metadata.
using SimTarget = std::variant<Cuboid, VoxelField>;
MeasurementSet simulate_timeseries(const SimTarget& target,
                                   const std::vector<SourceDetectorPair>& pairs, double dt,
                                   int n_bins, const OpticalMedium& medium,
                                   const InstrumentResponse& irf, const QuadConfig& quad = {},
                                   int threads = 0);

// Fit window for one series: t0 = (k0 - 1 - peak_offset) * dt clamped to >= 0,
// where k0 is the (1-based) peak bin, ties broken toward the earliest bin.
TimeWindow select_window(const std::vector<double>& series, double dt, int n_t,
                         int peak_offset);

// Windowed copy of a full-grid set: n_t samples per pair starting at its
// selected window origin.
MeasurementSet apply_windows(const MeasurementSet& full, int n_t, int peak_offset);

// Time-integrated intensity I_i = int_0^T U_i dt per pair (trapezoid), in
// acquisition order. Requires full-grid data covering [0, T].
std::vector<double> topography_integrals(const MeasurementSet& measurements, double T);

}  // namespace fdot

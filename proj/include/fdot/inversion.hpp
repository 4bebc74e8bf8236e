#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fdot/forward.hpp"
#include "fdot/geometry.hpp"

namespace fdot {

// Cube target described by center, edge and amplitude (stage 2 unknowns).
struct CubicParams {
    double x0 = 0.0, y0 = 0.0, z0 = 0.0;
    double l = 0.0;
    double M = 0.0;

    Cuboid to_cuboid() const {
        return {x0 - l / 2, x0 + l / 2, y0 - l / 2, y0 + l / 2, z0 - l / 2, z0 + l / 2, M};
    }
};

// Full cuboid unknowns of stage 3.
struct CuboidParams {
    double x1 = 0.0, x2 = 0.0;
    double y1 = 0.0, y2 = 0.0;
    double z1 = 0.0, z2 = 0.0;
    double M = 0.0;

    Cuboid to_cuboid() const { return {x1, x2, y1, y2, z1, z2, M}; }
};

// Per-parameter box plus the coupled cube rule l <= min(l_max, 2 z0), which
// keeps the cube inside the half-space.
struct BoundsBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int l_index = -1;   // coupled rule applies when both indices are set
    int z0_index = -1;

    void validate() const;
    bool contains(const Eigen::VectorXd& x) const;
    void project(Eigen::VectorXd& x) const;
};

struct LMConfig {
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    int max_iter = 200;
    double gtol = 1e-8;   // on the max-norm of J^T r
    double ftol = 1e-8;   // relative objective decrease per accepted step
    double xtol = 1e-6;   // relative step length
    double fd_step = 1e-4;
};

struct TraceEntry {
    double objective = 0.0;  // F at the attempted point
    double lambda = 0.0;
    bool accepted = false;
};

struct LMResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;  // attempted steps == trace length
    bool converged = false;
    std::string stop_reason;
    std::vector<TraceEntry> trace;
};

struct LMProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
    // Feasibility projection applied to every trial point (box, coupled rule,
    // ordering fixes). Defaults to BoundsBox::project.
    std::function<void(Eigen::VectorXd&)> project;
    BoundsBox bounds;
    // Natural magnitudes per parameter for finite-difference steps.
    Eigen::VectorXd scales;
    int threads = 1;  // workers for Jacobian columns
};

// Damped normal equations (J^T J + lambda diag(J^T J)) delta = -J^T r with
// accept/reject lambda control, box projection and full trace recording.
LMResult lm_solve(const LMProblem& problem, const Eigen::VectorXd& x0, const LMConfig& config);

// Central-difference Jacobian with per-parameter step fd_step*max(|p|, scale).
// Falls back to a one-sided difference when the step would cross a bound;
// affected columns are flagged in one_sided when provided.
Eigen::MatrixXd jacobian_fd(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& scales,
                            double fd_step, const BoundsBox* bounds = nullptr,
                            std::vector<bool>* one_sided = nullptr, int threads = 1);

// Residual vector U_model - U_exp in pair-major, time-minor order; the
// objective F is its Euclidean norm.
std::vector<double> residuals(const Cuboid& cuboid, const MeasurementSet& data,
                              const CuboidEmissionModel& model);

// Reconstruction bounds in physical terms (defaults follow the experiment
// setup: 0 < z0 < 30, 0 < l < min(20, 2 z0), 0 < M < 10).
struct ReconstructionBounds {
    double lateral_min = -50.0;
    double lateral_max = 50.0;
    double z0_max = 30.0;
    double l_max = 20.0;
    double m_max = 10.0;
    double z_face_max = 40.0;  // cuboid face depth cap (stage 3)
    double z_eps = 1e-3;       // strictness margin for z > 0

    BoundsBox cubic_box() const;
    BoundsBox cuboid_box() const;
};

struct StageResult {
    std::variant<CubicParams, CuboidParams> params;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
    std::vector<TraceEntry> trace;
};

struct TopographyConfig {
    double threshold_ratio = 0.1;  // bright if I >= ratio * max(I)
    double margin = 5.0;           // mm added around the bright midpoints
};

// Step 1: region of interest from the time-integrated intensities. Bright
// pairs are those within threshold_ratio of the maximum; Gamma is the
// bounding box of their source-detector midpoints plus the margin.
Region stage1_topography(const MeasurementSet& data, const TopographyConfig& config = {});

// Step 2: five-parameter cube fit underneath Gamma. Default start is the
// Gamma center with z0 = 5, l = 4, M = 0.1.
StageResult stage2_cubic(const Region& gamma, const MeasurementSet& data,
                         const ReconstructionBounds& bounds, const LMConfig& config,
                         const QuadConfig& quad = {},
                         const std::optional<CubicParams>& init_override = std::nullopt,
                         int threads = 1);

// Step 3: seven-parameter cuboid fit seeded by the cube result.
StageResult stage3_cuboid(const CubicParams& seed, const MeasurementSet& data,
                          const ReconstructionBounds& bounds, const LMConfig& config,
                          const QuadConfig& quad = {}, int threads = 1);

struct PipelineConfig {
    TopographyConfig topography;
    ReconstructionBounds bounds;
    LMConfig lm;
    QuadConfig quad;
    int n_t = 20;          // fit window length
    int peak_offset = 9;   // t0 = (k0 - 1 - peak_offset) * dt
    std::optional<CubicParams> stage2_init;
    int threads = 1;
};

struct ReconstructionResult {
    Region gamma;
    StageResult cubic;
    StageResult cuboid;
    std::vector<double> integrals;  // topography I_i
};

// Full narrowing pipeline on full-grid data: topography -> cube -> cuboid.
// Stage 3 only ever starts from the stage-2 output.
ReconstructionResult reconstruct(const MeasurementSet& full_data, const PipelineConfig& config);

}  // namespace fdot

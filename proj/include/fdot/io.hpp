#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fdot/forward.hpp"
#include "fdot/inversion.hpp"
#include "fdot/phantom.hpp"

namespace fdot {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Parse error with the offending key path or line attached.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IrfSpec {
    bool is_delta = true;
    std::string path;  // sampled profile file (time_ps, weight)
    double tau = 0.0;

    InstrumentResponse load() const;
};

struct EllipsoidSpec {
    EllipsoidTarget target;
    double spacing = 0.5;  // voxelization pitch for simulation
};

using TargetSpec = std::variant<EllipsoidSpec, Cuboid, std::string /*voxel file*/>;
using LayoutSpec = std::variant<std::string /*"paper32"|"beef16"*/,
                                std::vector<SourceDetectorPair>>;

struct TimeGrid {
    double dt = 6.67;
    int n_bins = 160;
    int n_t = 20;
    int peak_offset = 9;
};

struct RunConfig {
    double mu_s_prime = 0.92;
    double mu_a = 0.023;
    double n_rel = 1.37;
    IrfSpec irf;
    LayoutSpec layout = std::string("paper32");
    std::optional<TargetSpec> target;
    TimeGrid time;
    NoiseSpec noise{0.05, 1};
    ReconstructionBounds bounds;
    LMConfig lm;
    QuadConfig quad;
    TopographyConfig topography;
    std::optional<CubicParams> stage2_init;
    std::string output_dir = "out";

    OpticalMedium medium() const { return derive_medium(mu_s_prime, mu_a, n_rel); }
    std::vector<SourceDetectorPair> pairs() const;
    PipelineConfig pipeline(int threads) const;
};

// Strict JSON loader: duplicate or unknown keys are hard errors, cross-field
// rules (n_t <= n_bins, referenced files exist) are checked here.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = "");
nlohmann::json config_to_json(const RunConfig& config);
void save_config(const RunConfig& config, const std::string& path);

// Line-oriented measurement format: '#' headers carry medium, grid and pair
// geometry; data lines are `pair_index time_ps value` with 17 significant
// digits, so write-then-read is bit-exact for finite values.
void write_measurements(const MeasurementSet& set, const std::string& path);
MeasurementSet read_measurements(const std::string& path,
                                 std::vector<std::string>* warnings = nullptr);

// Voxel field files: '#' headers for origin/spacing/dims, one value per line.
void write_voxel_field(const VoxelField& field, const std::string& path);
VoxelField read_voxel_field(const std::string& path);

// Sampled IRF profile: two columns (time_ps, weight) on a uniform grid.
InstrumentResponse read_irf_profile(const std::string& path, double tau);

struct ResultRecord {
    std::string version = kToolkitVersion;
    uint64_t seed = 0;
    nlohmann::json config_echo;
    Region gamma;
    std::vector<double> integrals;
    StageResult cubic;
    StageResult cuboid;
};

nlohmann::json result_to_json(const ResultRecord& record);
void write_result(const ResultRecord& record, const std::string& path);
void write_timings(const std::vector<std::pair<std::string, double>>& timings_ms,
                   const std::string& path);

// Three cross-section CSVs (plane at the cuboid z midpoint, x-z plane, y-z
// plane): closed rectangle outline plus, when a truth ellipsoid is given, its
// section ellipse sampled at 256 points.
void emit_cross_sections(const CuboidParams& cuboid, bool converged,
                         const std::optional<EllipsoidTarget>& truth,
                         const std::string& out_dir);

}  // namespace fdot

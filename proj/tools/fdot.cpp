// Command-line front end: simulate emission data, run the three-stage
// reconstruction, dump topography tables, or cross-check the factorized
// forward operator against the voxelized one.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "fdot/io.hpp"
#include "fdot/parallel.hpp"
#include "fdot/rng.hpp"

namespace fs = std::filesystem;
using namespace fdot;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    int threads = 0;
    std::string out_dir;
    bool verbose = false;
};

double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

RunConfig load_cfg(const GlobalOpts& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.noise.seed = *opts.seed;
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    return cfg;
}

SimTarget build_target(const RunConfig& cfg) {
    if (!cfg.target) throw ConfigError("config has no target section");
    if (std::holds_alternative<EllipsoidSpec>(*cfg.target)) {
        const auto& e = std::get<EllipsoidSpec>(*cfg.target);
        return voxelize_ellipsoid(e.target, e.spacing);
    }
    if (std::holds_alternative<Cuboid>(*cfg.target)) return std::get<Cuboid>(*cfg.target);
    return read_voxel_field(std::get<std::string>(*cfg.target));
}

int run_simulate(const GlobalOpts& opts) {
    const RunConfig cfg = load_cfg(opts);
    const auto medium = cfg.medium();
    const auto pairs = cfg.pairs();
    const auto irf = cfg.irf.load();
    const SimTarget target = build_target(cfg);

    const auto clean = simulate_timeseries(target, pairs, cfg.time.dt, cfg.time.n_bins, medium,
                                           irf, cfg.quad, opts.threads);
    const auto noisy = add_noise(clean, cfg.noise);

    fs::create_directories(cfg.output_dir);
    const auto clean_path = (fs::path(cfg.output_dir) / "clean.meas").string();
    const auto noisy_path = (fs::path(cfg.output_dir) / "noisy.meas").string();
    write_measurements(clean, clean_path);
    write_measurements(noisy, noisy_path);
    if (opts.verbose)
        for (size_t i = 0; i < pairs.size(); ++i)
            std::printf("pair %2d peak bin %d\n", pairs[i].index, clean.windows[i].k0);
    std::printf("wrote %s and %s (%zu pairs, %d bins, noise %.3g, seed %llu)\n",
                clean_path.c_str(), noisy_path.c_str(), pairs.size(), cfg.time.n_bins,
                cfg.noise.level, static_cast<unsigned long long>(cfg.noise.seed));
    return 0;
}

int run_reconstruct(const GlobalOpts& opts, const std::string& data_path) {
    const RunConfig cfg = load_cfg(opts);
    const MeasurementSet data = read_measurements(data_path);

    const auto t_start = std::chrono::steady_clock::now();
    const ReconstructionResult recon = reconstruct(data, cfg.pipeline(opts.threads));
    const double total_ms = elapsed_ms(t_start);

    ResultRecord record;
    record.seed = cfg.noise.seed;
    record.config_echo = config_to_json(cfg);
    record.gamma = recon.gamma;
    record.integrals = recon.integrals;
    record.cubic = recon.cubic;
    record.cuboid = recon.cuboid;

    fs::create_directories(cfg.output_dir);
    write_result(record, (fs::path(cfg.output_dir) / "result.json").string());
    write_timings({{"reconstruct_ms", total_ms}},
                  (fs::path(cfg.output_dir) / "timings.json").string());

    std::optional<EllipsoidTarget> truth;
    if (cfg.target && std::holds_alternative<EllipsoidSpec>(*cfg.target))
        truth = std::get<EllipsoidSpec>(*cfg.target).target;
    if (std::holds_alternative<CuboidParams>(record.cuboid.params)) {
        emit_cross_sections(std::get<CuboidParams>(record.cuboid.params),
                            record.cuboid.converged, truth, cfg.output_dir);
    }

    std::printf("Gamma: [%.3g, %.3g] x [%.3g, %.3g]\n", recon.gamma.x_min, recon.gamma.x_max,
                recon.gamma.y_min, recon.gamma.y_max);
    if (std::holds_alternative<CubicParams>(recon.cubic.params)) {
        const auto& c = std::get<CubicParams>(recon.cubic.params);
        std::printf("cubic:  (x0, y0, z0, l, M) = (%.4g, %.4g, %.4g, %.4g, %.4g)  F = %.6g, %d iterations%s\n",
                    c.x0, c.y0, c.z0, c.l, c.M, recon.cubic.objective, recon.cubic.iterations,
                    recon.cubic.converged ? "" : " [not converged]");
    }
    if (std::holds_alternative<CuboidParams>(recon.cuboid.params)) {
        const auto& c = std::get<CuboidParams>(recon.cuboid.params);
        std::printf("cuboid: (x1, x2) = (%.4g, %.4g), (y1, y2) = (%.4g, %.4g), (z1, z2) = (%.4g, %.4g), M = %.4g  F = %.6g, %d iterations%s\n",
                    c.x1, c.x2, c.y1, c.y2, c.z1, c.z2, c.M, recon.cuboid.objective,
                    recon.cuboid.iterations, recon.cuboid.converged ? "" : " [not converged]");
    }
    if (!recon.cubic.converged || !recon.cuboid.converged) return 2;
    std::printf("results in %s\n", cfg.output_dir.c_str());
    return 0;
}

int run_topography(const GlobalOpts& opts, const std::string& data_path) {
    TopographyConfig topo;
    if (!opts.config_path.empty()) topo = load_config(opts.config_path).topography;
    const MeasurementSet data = read_measurements(data_path);
    const double dt = data.windows.front().dt;
    const double T = (data.values.front().size() - 1) * dt;
    const auto integrals = topography_integrals(data, T);
    for (size_t i = 0; i < integrals.size(); ++i)
        std::printf("I_%-2d = %.6e\n", data.pairs[i].index, integrals[i]);
    const Region gamma = stage1_topography(data, topo);
    std::printf("Gamma: [%.6g, %.6g] x [%.6g, %.6g]\n", gamma.x_min, gamma.x_max, gamma.y_min,
                gamma.y_max);
    return 0;
}

int run_check_forward(const GlobalOpts& opts, int cases, double tolerance, double spacing) {
    OpticalMedium medium = derive_medium(0.92, 0.023, 1.37);
    QuadConfig quad;
    if (!opts.config_path.empty()) {
        const RunConfig cfg = load_config(opts.config_path);
        medium = cfg.medium();
        quad = cfg.quad;
    }
    const auto irf = InstrumentResponse::delta(0.0);
    const auto pairs = layout_paper32();
    const uint64_t seed = opts.seed.value_or(7);

    double max_rel = 0.0;
    uint64_t draw = 0;
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform_at(seed, draw++); };
    for (int c = 0; c < cases; ++c) {
        Cuboid cb;
        const double ex = u(1.0, 2.5), ey = u(1.0, 2.5), ez = u(1.0, 2.5);
        const double cx = u(-6.0, 6.0), cy = u(-6.0, 6.0);
        cb.x1 = cx - ex / 2;
        cb.x2 = cx + ex / 2;
        cb.y1 = cy - ey / 2;
        cb.y2 = cy + ey / 2;
        cb.z1 = u(8.0, 11.0);
        cb.z2 = cb.z1 + ez;
        cb.M = u(0.005, 0.05);
        const auto& pair = pairs[static_cast<size_t>(u(0.0, 32.0)) % 32];

        VoxelField field;
        field.spacing = {spacing, spacing, spacing};
        field.nx = static_cast<int>(std::lround((cb.x2 - cb.x1) / spacing));
        field.ny = static_cast<int>(std::lround((cb.y2 - cb.y1) / spacing));
        field.nz = static_cast<int>(std::lround((cb.z2 - cb.z1) / spacing));
        field.origin = {cb.x1, cb.y1, cb.z1};
        field.values.assign(static_cast<size_t>(field.nx) * field.ny * field.nz, cb.M);

        for (int k = 0; k < 3; ++k) {
            const double t = u(350.0, 1000.0);
            const double factorized = forward_cuboid(cb, pair, t, medium, irf, quad);
            const double voxelized =
                forward_voxelized(field, pair, t, medium, irf, quad, opts.threads);
            const double rel = std::abs(factorized - voxelized) / std::abs(voxelized);
            max_rel = std::max(max_rel, rel);
            if (opts.verbose || rel > tolerance)
                std::printf("case %2d pair %2d t %7.1f  factorized %.8e voxelized %.8e rel %.3e\n",
                            c, pair.index, t, factorized, voxelized, rel);
        }
    }
    std::printf("checked %d cuboids x 3 times: max relative error %.3e (tolerance %.1e)\n",
                cases, max_rel, tolerance);
    return max_rel < tolerance ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fdot: time-resolved fluorescence tomography toolkit"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "JSON run configuration");
    uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override the noise seed");
    app.add_option("--threads", opts.threads, "worker threads (0 = hardware)");
    app.add_option("--out", opts.out_dir, "override the output directory");
    app.add_flag("--verbose", opts.verbose, "chatty progress output");

    auto* simulate = app.add_subcommand("simulate", "synthesize clean + noisy measurements");
    std::string data_path;
    auto* reconstruct_cmd =
        app.add_subcommand("reconstruct", "run topography -> cube -> cuboid on a measurement file");
    reconstruct_cmd->add_option("data", data_path, "measurement file")->required();
    auto* topography_cmd = app.add_subcommand("topography", "print I_i table and Gamma");
    topography_cmd->add_option("data", data_path, "measurement file")->required();
    auto* check = app.add_subcommand("check-forward", "factorized vs voxelized oracle report");
    int cases = 10;
    double tolerance = 1e-3;
    double spacing = 0.1;
    check->add_option("--cases", cases, "number of random cuboids");
    check->add_option("--tolerance", tolerance, "relative error threshold");
    check->add_option("--spacing", spacing, "voxel spacing for the oracle (mm)");

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) opts.seed = seed_value;
    if (opts.threads > 0) set_default_threads(opts.threads);

    try {
        if (simulate->parsed()) return run_simulate(opts);
        if (reconstruct_cmd->parsed()) return run_reconstruct(opts, data_path);
        if (topography_cmd->parsed()) return run_topography(opts, data_path);
        if (check->parsed()) return run_check_forward(opts, cases, tolerance, spacing);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

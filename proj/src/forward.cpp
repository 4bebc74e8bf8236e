#include "fdot/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdot/parallel.hpp"
#include "fdot/quadrature.hpp"

namespace fdot {

bool MeasurementSet::full_grid() const {
    for (const auto& w : windows)
        if (w.t0 != 0.0) return false;
    return !windows.empty();
}

void MeasurementSet::validate() const {
    if (pairs.size() != windows.size() || pairs.size() != values.size())
        throw std::runtime_error("MeasurementSet: pairs/windows/values shape mismatch");
    for (size_t i = 0; i < pairs.size(); ++i)
        if (values[i].size() != static_cast<size_t>(windows[i].n_t))
            throw std::runtime_error("MeasurementSet: series length does not match window");
}

CuboidEmissionModel::CuboidEmissionModel(const OpticalMedium& medium,
                                         const InstrumentResponse& irf, const QuadConfig& quad)
    : medium_(medium), irf_(irf), q_kernel_(irf, medium), quad_(quad) {
    // Warm the shared quadrature cache so worker threads never contend on it.
    gauss_legendre(quad_.time_nodes);
    gauss_legendre(2 * quad_.time_nodes);
    gauss_legendre(quad_.z_nodes);
    gauss_legendre(quad_.outer_nodes);
}

double CuboidEmissionModel::inner_integral(const Cuboid& cuboid, const SourceDetectorPair& pair,
                                           double T, F2Cache& cache, int time_nodes) const {
    const auto& rule = gauss_legendre(time_nodes);
    auto [it, fresh] = cache.try_emplace(T);
    std::vector<double>& f2_at_nodes = it->second;
    if (fresh) {
        f2_at_nodes.resize(rule.nodes.size());
        for (size_t i = 0; i < rule.nodes.size(); ++i) {
            const double s = map_to_interval(0.0, T, rule.nodes[i]);
            f2_at_nodes[i] = f2(T, s, cuboid.z1, cuboid.z2, medium_, quad_.z_nodes);
        }
    }
    double acc = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = map_to_interval(0.0, T, rule.nodes[i]);
        const double w = interval_weight(0.0, T, rule.weights[i]);
        acc += w *
               f1(pair.detector, pair.source, T, s, cuboid.x1, cuboid.x2, cuboid.y1, cuboid.y2,
                  medium_) *
               f2_at_nodes[i];
    }
    return acc;
}

double CuboidEmissionModel::value_cached(const Cuboid& cuboid, const SourceDetectorPair& pair,
                                         double t, F2Cache& cache, int time_nodes) const {
    if (t < 0.0) throw std::domain_error("forward_cuboid: negative time");
    if (t == 0.0) return 0.0;
    if (cuboid.M == 0.0 || cuboid.x1 == cuboid.x2 || cuboid.y1 == cuboid.y2 ||
        cuboid.z1 == cuboid.z2)
        return 0.0;

    switch (q_kernel_.kind()) {
        case QKernel::Kind::DeltaWeight:
            return cuboid.M * q_kernel_.delta_weight() *
                   inner_integral(cuboid, pair, t, cache, time_nodes);
        case QKernel::Kind::ExpDecay: {
            const auto& rule = gauss_legendre(quad_.outer_nodes);
            double acc = 0.0;
            for (size_t k = 0; k < rule.nodes.size(); ++k) {
                const double s = map_to_interval(0.0, t, rule.nodes[k]);
                const double w = interval_weight(0.0, t, rule.weights[k]);
                acc += w * q_kernel_.at(s) * inner_integral(cuboid, pair, t - s, cache, time_nodes);
            }
            return cuboid.M * acc;
        }
        case QKernel::Kind::Sampled: {
            // Q is only known at sample resolution; trapezoid on its grid.
            const double dt = q_kernel_.grid_dt();
            const auto n_cells = static_cast<size_t>(t / dt);
            auto term = [&](double s) {
                return s >= t ? 0.0
                              : q_kernel_.at(s) * inner_integral(cuboid, pair, t - s, cache, time_nodes);
            };
            double acc = 0.0;
            double prev = term(0.0);
            for (size_t j = 1; j <= n_cells; ++j) {
                const double cur = term(j * dt);
                acc += 0.5 * dt * (prev + cur);
                prev = cur;
            }
            const double t_last = n_cells * dt;
            if (t > t_last) acc += 0.5 * (t - t_last) * prev;  // term(t) = 0
            return cuboid.M * acc;
        }
    }
    return 0.0;
}

double CuboidEmissionModel::value(const Cuboid& cuboid, const SourceDetectorPair& pair,
                                  double t) const {
    F2Cache cache;
    return value_cached(cuboid, pair, t, cache, quad_.time_nodes);
}

std::vector<double> CuboidEmissionModel::evaluate_windows(
    const Cuboid& cuboid, const std::vector<SourceDetectorPair>& pairs,
    const std::vector<TimeWindow>& windows) const {
    if (pairs.size() != windows.size())
        throw std::runtime_error("evaluate_windows: pairs/windows mismatch");
    F2Cache cache;  // shared across pairs: window times land on a common grid
    std::vector<double> out;
    for (size_t i = 0; i < pairs.size(); ++i) {
        for (int k = 1; k <= windows[i].n_t; ++k)
            out.push_back(value_cached(cuboid, pairs[i], windows[i].time_at(k), cache,
                                       quad_.time_nodes));
    }
    return out;
}

double forward_cuboid(const Cuboid& cuboid, const SourceDetectorPair& pair, double t,
                      const OpticalMedium& medium, const InstrumentResponse& irf,
                      const QuadConfig& quad) {
    if (t <= 0.0) throw std::domain_error("forward_cuboid: t must be positive");
    cuboid.validate();
    return CuboidEmissionModel(medium, irf, quad).value(cuboid, pair, t);
}

CheckedValue forward_cuboid_checked(const Cuboid& cuboid, const SourceDetectorPair& pair,
                                    double t, const OpticalMedium& medium,
                                    const InstrumentResponse& irf, const QuadConfig& quad) {
    const double coarse = forward_cuboid(cuboid, pair, t, medium, irf, quad);
    QuadConfig refined = quad;
    refined.time_nodes *= 2;
    const double fine = forward_cuboid(cuboid, pair, t, medium, irf, refined);
    CheckedValue out;
    out.value = coarse;
    out.rel_change = std::abs(coarse - fine) / std::max(std::abs(fine), 1e-300);
    out.converged = out.rel_change <= quad.check_tol;
    return out;
}

namespace {

// Time-convolution kernel of the two Green's functions for one voxel.
double voxel_time_integral(const Vec3& voxel, const SourceDetectorPair& pair, double T,
                           const OpticalMedium& medium, const QuadratureRule& rule) {
    const Vec3 r_d{pair.detector.x, pair.detector.y, 0.0};
    const Vec3 r_s{pair.source.x, pair.source.y, 0.0};
    double acc = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = map_to_interval(0.0, T, rule.nodes[i]);
        const double w = interval_weight(0.0, T, rule.weights[i]);
        acc += w * greens_function(r_d, voxel, T - s, medium) *
               greens_function(voxel, r_s, s, medium);
    }
    return acc;
}

}  // namespace

double forward_voxelized(const VoxelField& field, const SourceDetectorPair& pair, double t,
                         const OpticalMedium& medium, const InstrumentResponse& irf,
                         const QuadConfig& quad, int threads) {
    if (t <= 0.0) throw std::domain_error("forward_voxelized: t must be positive");
    field.validate();
    const QKernel q_kernel(irf, medium);
    const auto& rule = gauss_legendre(quad.time_nodes);
    const auto& outer_rule = gauss_legendre(quad.outer_nodes);
    const double vol = field.voxel_volume();

    // Emission of a single voxel of unit n*volume.
    auto voxel_value = [&](const Vec3& center) {
        switch (q_kernel.kind()) {
            case QKernel::Kind::DeltaWeight:
                return q_kernel.delta_weight() * voxel_time_integral(center, pair, t, medium, rule);
            case QKernel::Kind::ExpDecay: {
                double acc = 0.0;
                for (size_t k = 0; k < outer_rule.nodes.size(); ++k) {
                    const double s = map_to_interval(0.0, t, outer_rule.nodes[k]);
                    const double w = interval_weight(0.0, t, outer_rule.weights[k]);
                    acc += w * q_kernel.at(s) * voxel_time_integral(center, pair, t - s, medium, rule);
                }
                return acc;
            }
            case QKernel::Kind::Sampled: {
                const double dt = q_kernel.grid_dt();
                const auto n_cells = static_cast<size_t>(t / dt);
                auto term = [&](double s) {
                    return s >= t ? 0.0
                                  : q_kernel.at(s) * voxel_time_integral(center, pair, t - s, medium, rule);
                };
                double acc = 0.0;
                double prev = term(0.0);
                for (size_t j = 1; j <= n_cells; ++j) {
                    const double cur = term(j * dt);
                    acc += 0.5 * dt * (prev + cur);
                    prev = cur;
                }
                const double t_last = n_cells * dt;
                if (t > t_last) acc += 0.5 * (t - t_last) * prev;
                return acc;
            }
        }
        return 0.0;
    };

    const size_t n_voxels = field.values.size();
    const size_t chunk = 512;
    const size_t n_chunks = (n_voxels + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks, 0.0);
    parallel_for(
        n_chunks,
        [&](size_t ci) {
            double acc = 0.0;
            const size_t begin = ci * chunk;
            const size_t end = std::min(begin + chunk, n_voxels);
            for (size_t idx = begin; idx < end; ++idx) {
                const double n_value = field.values[idx];
                if (n_value == 0.0) continue;
                const int i = static_cast<int>(idx % field.nx);
                const int j = static_cast<int>((idx / field.nx) % field.ny);
                const int k = static_cast<int>(idx / (static_cast<size_t>(field.nx) * field.ny));
                acc += n_value * voxel_value(field.center(i, j, k));
            }
            partial[ci] = acc;
        },
        threads);

    double total = 0.0;
    for (double p : partial) total += p;  // fixed order keeps the sum deterministic
    return vol * total;
}

MeasurementSet simulate_timeseries(const SimTarget& target,
                                   const std::vector<SourceDetectorPair>& pairs, double dt,
                                   int n_bins, const OpticalMedium& medium,
                                   const InstrumentResponse& irf, const QuadConfig& quad,
                                   int threads) {
    if (dt <= 0.0) throw std::invalid_argument("simulate_timeseries: dt must be positive");
    if (n_bins < 1) throw std::invalid_argument("simulate_timeseries: n_bins must be >= 1");

    MeasurementSet set;
    set.pairs = pairs;
    set.medium = medium;
    set.irf = irf;
    set.values.assign(pairs.size(), std::vector<double>(n_bins, 0.0));

    if (std::holds_alternative<Cuboid>(target)) {
        const Cuboid& cuboid = std::get<Cuboid>(target);
        cuboid.validate();
        const CuboidEmissionModel model(medium, irf, quad);
        std::vector<TimeWindow> grid(pairs.size());
        for (auto& w : grid) w = TimeWindow{0.0, dt, n_bins, 0};
        // evaluate_windows shares the f2 table across the whole grid; the
        // (pair, bin) workload left over is tiny, so no point threading it.
        const auto flat = model.evaluate_windows(cuboid, pairs, grid);
        for (size_t i = 0; i < pairs.size(); ++i)
            for (int k = 0; k < n_bins; ++k) set.values[i][k] = flat[i * n_bins + k];
    } else {
        const VoxelField& field = std::get<VoxelField>(target);
        field.validate();
        const size_t n_jobs = pairs.size() * static_cast<size_t>(n_bins);
        parallel_for(
            n_jobs,
            [&](size_t job) {
                const size_t i = job / n_bins;
                const int k = static_cast<int>(job % n_bins);
                const double t = k * dt;
                set.values[i][k] =
                    t == 0.0 ? 0.0 : forward_voxelized(field, pairs[i], t, medium, irf, quad, 1);
            },
            threads);
    }

    set.windows.resize(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& series = set.values[i];
        const auto peak = std::max_element(series.begin(), series.end());  // earliest max
        const int k0 = static_cast<int>(peak - series.begin()) + 1;
        if (k0 == n_bins && n_bins > 1)
            throw std::runtime_error("simulate_timeseries: emission peak of pair " +
                                     std::to_string(pairs[i].index) +
                                     " sits at the grid edge; increase n_bins");
        set.windows[i] = TimeWindow{0.0, dt, n_bins, k0};
    }
    return set;
}

TimeWindow select_window(const std::vector<double>& series, double dt, int n_t,
                         int peak_offset) {
    if (series.empty()) throw std::runtime_error("select_window: empty series");
    const auto peak = std::max_element(series.begin(), series.end());
    if (*peak <= 0.0) throw std::runtime_error("select_window: series has no signal");
    const int k0 = static_cast<int>(peak - series.begin()) + 1;
    const int start_bin = std::max(k0 - 1 - peak_offset, 0);  // 0-based index of t0
    return TimeWindow{start_bin * dt, dt, n_t, k0};
}

MeasurementSet apply_windows(const MeasurementSet& full, int n_t, int peak_offset) {
    full.validate();
    if (!full.full_grid())
        throw std::runtime_error("apply_windows: measurement set is already windowed");
    MeasurementSet out;
    out.pairs = full.pairs;
    out.medium = full.medium;
    out.irf = full.irf;
    out.windows.resize(full.pairs.size());
    out.values.resize(full.pairs.size());
    for (size_t i = 0; i < full.pairs.size(); ++i) {
        const auto& series = full.values[i];
        const double dt = full.windows[i].dt;
        TimeWindow w = select_window(series, dt, n_t, peak_offset);
        const auto start = static_cast<size_t>(std::lround(w.t0 / dt));
        if (start + n_t > series.size())
            throw std::runtime_error("apply_windows: window of pair " +
                                     std::to_string(full.pairs[i].index) +
                                     " extends past the series; increase n_bins");
        out.windows[i] = w;
        out.values[i].assign(series.begin() + start, series.begin() + start + n_t);
    }
    return out;
}

std::vector<double> topography_integrals(const MeasurementSet& measurements, double T) {
    measurements.validate();
    if (!measurements.full_grid())
        throw std::runtime_error("topography_integrals: full-grid series required");
    std::vector<double> integrals;
    integrals.reserve(measurements.pairs.size());
    for (size_t i = 0; i < measurements.pairs.size(); ++i) {
        const auto& series = measurements.values[i];
        const double dt = measurements.windows[i].dt;
        const double t_end = (series.size() - 1) * dt;
        if (T > t_end * (1.0 + 1e-12))
            throw std::runtime_error("topography_integrals: series do not cover [0, T]");
        const auto n_cells = static_cast<size_t>(T / dt);
        double acc = 0.0;
        for (size_t j = 0; j + 1 <= n_cells; ++j)
            acc += 0.5 * dt * (series[j] + series[j + 1]);
        const double t_last = n_cells * dt;
        if (T > t_last && n_cells + 1 < series.size()) {
            // partial trailing cell by linear interpolation
            const double frac = (T - t_last) / dt;
            const double v_T = series[n_cells] * (1.0 - frac) + series[n_cells + 1] * frac;
            acc += 0.5 * (T - t_last) * (series[n_cells] + v_T);
        }
        integrals.push_back(acc);
    }
    return integrals;
}

}  // namespace fdot

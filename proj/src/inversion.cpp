#include "fdot/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fdot/parallel.hpp"

namespace fdot {

void BoundsBox::validate() const {
    if (lower.size() != upper.size()) throw std::invalid_argument("BoundsBox: size mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (!(lower[i] < upper[i]))
            throw std::invalid_argument("BoundsBox: lower must be below upper");
}

bool BoundsBox::contains(const Eigen::VectorXd& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    if (l_index >= 0 && z0_index >= 0 && x[l_index] > 2.0 * x[z0_index]) return false;
    return true;
}

void BoundsBox::project(Eigen::VectorXd& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], lower[i], upper[i]);
    if (l_index >= 0 && z0_index >= 0) {
        // coupled cube rule: l <= 2 z0 keeps the top face below the boundary
        const double cap = 2.0 * x[z0_index] - 1e-9;
        if (x[l_index] > cap) x[l_index] = std::max(cap, lower[l_index]);
    }
}

Eigen::MatrixXd jacobian_fd(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& scales,
                            double fd_step, const BoundsBox* bounds,
                            std::vector<bool>* one_sided, int threads) {
    const Eigen::Index n = x.size();
    if (scales.size() != n) throw std::invalid_argument("jacobian_fd: scales size mismatch");
    const Eigen::VectorXd r0 = residuals(x);
    Eigen::MatrixXd jac(r0.size(), n);
    if (one_sided) one_sided->assign(n, false);

    parallel_for(
        static_cast<size_t>(n),
        [&](size_t ip) {
            const auto i = static_cast<Eigen::Index>(ip);
            const double h = fd_step * std::max(std::abs(x[i]), scales[i]);
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const bool plus_ok = !bounds || bounds->contains(xp);
            const bool minus_ok = !bounds || bounds->contains(xm);
            if (plus_ok && minus_ok) {
                jac.col(i) = (residuals(xp) - residuals(xm)) / (2.0 * h);
            } else if (plus_ok) {
                jac.col(i) = (residuals(xp) - r0) / h;
                if (one_sided) (*one_sided)[ip] = true;
            } else if (minus_ok) {
                jac.col(i) = (r0 - residuals(xm)) / h;
                if (one_sided) (*one_sided)[ip] = true;
            } else {
                // box thinner than the step; give up on this direction
                jac.col(i).setZero();
                if (one_sided) (*one_sided)[ip] = true;
            }
        },
        threads);
    return jac;
}

LMResult lm_solve(const LMProblem& problem, const Eigen::VectorXd& x0, const LMConfig& config) {
    problem.bounds.validate();
    if (!problem.bounds.contains(x0))
        throw std::invalid_argument("lm_solve: initial point violates the bounds");
    const auto project = problem.project
                             ? problem.project
                             : std::function<void(Eigen::VectorXd&)>(
                                   [&](Eigen::VectorXd& x) { problem.bounds.project(x); });

    LMResult result;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd r = problem.residuals(x);
    double objective = r.norm();
    double lambda = config.lambda0;
    bool need_jacobian = true;
    Eigen::MatrixXd jac;

    int consecutive_singular = 0;
    while (result.iterations < config.max_iter) {
        if (need_jacobian) {
            jac = jacobian_fd(problem.residuals, x, problem.scales, config.fd_step,
                              &problem.bounds, nullptr, problem.threads);
            need_jacobian = false;
        }
        const Eigen::VectorXd gradient = jac.transpose() * r;
        if (gradient.lpNorm<Eigen::Infinity>() < config.gtol) {
            result.converged = true;
            result.stop_reason = "gtol";
            break;
        }
        Eigen::MatrixXd normal = jac.transpose() * jac;
        Eigen::VectorXd damping = normal.diagonal();
        const double diag_floor = 1e-12 * std::max(damping.maxCoeff(), 1e-300);
        for (Eigen::Index i = 0; i < damping.size(); ++i)
            damping[i] = std::max(damping[i], diag_floor);
        normal.diagonal() += lambda * damping;

        const Eigen::VectorXd step = normal.ldlt().solve(-gradient);
        if (!step.allFinite()) {
            if (++consecutive_singular > 50) {
                result.stop_reason = "singular normal equations";
                break;
            }
            lambda *= config.lambda_up;
            continue;
        }
        consecutive_singular = 0;

        if (step.norm() <= config.xtol * (x.norm() + config.xtol)) {
            result.converged = true;
            result.stop_reason = "xtol";
            break;
        }

        Eigen::VectorXd x_trial = x + step;
        project(x_trial);
        const Eigen::VectorXd r_trial = problem.residuals(x_trial);
        const double f_trial = r_trial.norm();
        ++result.iterations;

        if (f_trial < objective) {
            result.trace.push_back({f_trial, lambda, true});
            const double drop = (objective - f_trial) / std::max(objective, 1e-300);
            x = x_trial;
            r = r_trial;
            objective = f_trial;
            lambda *= config.lambda_down;
            need_jacobian = true;
            if (drop < config.ftol) {
                result.converged = true;
                result.stop_reason = "ftol";
                break;
            }
        } else {
            result.trace.push_back({f_trial, lambda, false});
            lambda *= config.lambda_up;
        }
    }
    if (result.stop_reason.empty()) result.stop_reason = "max_iter";

    result.x = x;
    result.objective = objective;
    return result;
}

std::vector<double> residuals(const Cuboid& cuboid, const MeasurementSet& data,
                              const CuboidEmissionModel& model) {
    data.validate();
    const auto model_values = model.evaluate_windows(cuboid, data.pairs, data.windows);
    std::vector<double> out(model_values.size());
    size_t flat = 0;
    for (size_t i = 0; i < data.pairs.size(); ++i)
        for (int k = 0; k < data.windows[i].n_t; ++k, ++flat)
            out[flat] = model_values[flat] - data.values[i][k];
    return out;
}

BoundsBox ReconstructionBounds::cubic_box() const {
    BoundsBox box;
    box.lower.resize(5);
    box.upper.resize(5);
    box.lower << lateral_min, lateral_min, z_eps, z_eps, 0.0;
    box.upper << lateral_max, lateral_max, z0_max, l_max, m_max;
    box.z0_index = 2;
    box.l_index = 3;
    return box;
}

BoundsBox ReconstructionBounds::cuboid_box() const {
    BoundsBox box;
    box.lower.resize(7);
    box.upper.resize(7);
    box.lower << lateral_min, lateral_min, lateral_min, lateral_min, z_eps, z_eps, 0.0;
    box.upper << lateral_max, lateral_max, lateral_max, lateral_max, z_face_max, z_face_max,
        m_max;
    return box;
}

Region stage1_topography(const MeasurementSet& data, const TopographyConfig& config) {
    data.validate();
    const double dt = data.windows.empty() ? 0.0 : data.windows.front().dt;
    const double T = data.values.empty() ? 0.0 : (data.values.front().size() - 1) * dt;
    const auto integrals = topography_integrals(data, T);
    const double max_i = *std::max_element(integrals.begin(), integrals.end());
    if (max_i <= 0.0) throw std::runtime_error("stage1_topography: no signal on any pair");

    bool any = false;
    Region gamma{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
                 std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
    for (size_t i = 0; i < integrals.size(); ++i) {
        if (integrals[i] < config.threshold_ratio * max_i) continue;
        any = true;
        const auto& p = data.pairs[i];
        const double mx = 0.5 * (p.source.x + p.detector.x);
        const double my = 0.5 * (p.source.y + p.detector.y);
        gamma.x_min = std::min(gamma.x_min, mx);
        gamma.x_max = std::max(gamma.x_max, mx);
        gamma.y_min = std::min(gamma.y_min, my);
        gamma.y_max = std::max(gamma.y_max, my);
    }
    if (!any) throw std::runtime_error("stage1_topography: no bright pairs above threshold");
    gamma.x_min -= config.margin;
    gamma.x_max += config.margin;
    gamma.y_min -= config.margin;
    gamma.y_max += config.margin;
    return gamma;
}

namespace {

StageResult run_stage(const LMProblem& problem, const Eigen::VectorXd& x0, const LMConfig& config,
                      bool cubic) {
    const LMResult lm = lm_solve(problem, x0, config);
    StageResult stage;
    if (cubic) {
        stage.params = CubicParams{lm.x[0], lm.x[1], lm.x[2], lm.x[3], lm.x[4]};
    } else {
        stage.params = CuboidParams{lm.x[0], lm.x[1], lm.x[2], lm.x[3], lm.x[4], lm.x[5], lm.x[6]};
    }
    stage.objective = lm.objective;
    stage.iterations = lm.iterations;
    stage.converged = lm.converged;
    stage.stop_reason = lm.stop_reason;
    stage.trace = lm.trace;
    return stage;
}

}  // namespace

StageResult stage2_cubic(const Region& gamma, const MeasurementSet& data,
                         const ReconstructionBounds& bounds, const LMConfig& config,
                         const QuadConfig& quad, const std::optional<CubicParams>& init_override,
                         int threads) {
    CubicParams init = init_override.value_or(
        CubicParams{0.5 * (gamma.x_min + gamma.x_max), 0.5 * (gamma.y_min + gamma.y_max),
                    5.0, 4.0, 0.1});

    const CuboidEmissionModel model(data.medium, data.irf, quad);
    LMProblem problem;
    problem.bounds = bounds.cubic_box();
    problem.scales.resize(5);
    problem.scales << 1.0, 1.0, 1.0, 1.0, 0.01;  // mm for lengths, 0.01/mm for M
    problem.threads = threads;
    problem.residuals = [&model, &data](const Eigen::VectorXd& x) {
        const CubicParams p{x[0], x[1], x[2], x[3], x[4]};
        const auto r = residuals(p.to_cuboid(), data, model);
        return Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()))
            .eval();
    };

    Eigen::VectorXd x0(5);
    x0 << init.x0, init.y0, init.z0, init.l, init.M;
    return run_stage(problem, x0, config, true);
}

StageResult stage3_cuboid(const CubicParams& seed, const MeasurementSet& data,
                          const ReconstructionBounds& bounds, const LMConfig& config,
                          const QuadConfig& quad, int threads) {
    const Cuboid start = seed.to_cuboid();  // (x0 -+ l/2, ..., M) seeding rule

    const CuboidEmissionModel model(data.medium, data.irf, quad);
    LMProblem problem;
    problem.bounds = bounds.cuboid_box();
    problem.scales.resize(7);
    problem.scales << 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.01;
    problem.threads = threads;
    const BoundsBox box = problem.bounds;
    problem.project = [box](Eigen::VectorXd& x) {
        box.project(x);
        // keep faces ordered: collapse inverted intervals to midpoint +- eps
        constexpr double eps = 0.01;
        for (int lo = 0; lo <= 4; lo += 2) {
            if (x[lo] >= x[lo + 1]) {
                const double mid = 0.5 * (x[lo] + x[lo + 1]);
                x[lo] = mid - eps;
                x[lo + 1] = mid + eps;
            }
        }
        if (x[4] < box.lower[4]) x[4] = box.lower[4];  // z1 back above the boundary
    };
    problem.residuals = [&model, &data](const Eigen::VectorXd& x) {
        const CuboidParams p{x[0], x[1], x[2], x[3], x[4], x[5], x[6]};
        const auto r = residuals(p.to_cuboid(), data, model);
        return Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()))
            .eval();
    };

    Eigen::VectorXd x0(7);
    x0 << start.x1, start.x2, start.y1, start.y2, start.z1, start.z2, start.M;
    problem.project(x0);
    return run_stage(problem, x0, config, false);
}

ReconstructionResult reconstruct(const MeasurementSet& full_data, const PipelineConfig& config) {
    ReconstructionResult result;
    const double dt = full_data.windows.empty() ? 0.0 : full_data.windows.front().dt;
    const double T = full_data.values.empty() ? 0.0 : (full_data.values.front().size() - 1) * dt;
    result.integrals = topography_integrals(full_data, T);
    result.gamma = stage1_topography(full_data, config.topography);

    const MeasurementSet windowed = apply_windows(full_data, config.n_t, config.peak_offset);
    result.cubic = stage2_cubic(result.gamma, windowed, config.bounds, config.lm, config.quad,
                                config.stage2_init, config.threads);
    if (!result.cubic.converged) return result;  // partial result, cuboid left empty

    result.cuboid = stage3_cuboid(std::get<CubicParams>(result.cubic.params), windowed,
                                  config.bounds, config.lm, config.quad, config.threads);
    return result;
}

}  // namespace fdot

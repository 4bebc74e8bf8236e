#include "fdot/irf.hpp"

#include <cmath>
#include <stdexcept>

namespace fdot {

InstrumentResponse InstrumentResponse::sampled(double dt, std::vector<double> samples, double tau) {
    if (dt <= 0.0) throw std::invalid_argument("InstrumentResponse: dt must be positive");
    if (samples.empty()) throw std::invalid_argument("InstrumentResponse: no samples");
    for (double v : samples)
        if (v < 0.0) throw std::invalid_argument("InstrumentResponse: negative sample");
    if (tau < 0.0) throw std::domain_error("InstrumentResponse: negative lifetime");
    InstrumentResponse r;
    r.kind = Kind::Sampled;
    r.dt = dt;
    r.samples = std::move(samples);
    r.tau = tau;
    return r;
}

double InstrumentResponse::value_at(double t) const {
    if (kind == Kind::Delta)
        throw std::logic_error("InstrumentResponse::value_at on a delta profile");
    if (t < 0.0) return 0.0;
    const double u = t / dt;
    const auto j = static_cast<size_t>(u);
    if (j + 1 >= samples.size()) return j < samples.size() && u == static_cast<double>(j) ? samples[j] : 0.0;
    const double frac = u - static_cast<double>(j);
    return samples[j] * (1.0 - frac) + samples[j + 1] * frac;
}

InstrumentResponse irf_q(const InstrumentResponse& source_profile,
                         const InstrumentResponse& detector_profile) {
    if (source_profile.is_delta() && detector_profile.is_delta())
        return InstrumentResponse::delta(source_profile.tau);
    if (source_profile.is_delta()) {
        auto q = detector_profile;
        q.tau = source_profile.tau;
        return q;
    }
    if (detector_profile.is_delta()) return source_profile;
    if (std::abs(source_profile.dt - detector_profile.dt) > 1e-12 * source_profile.dt)
        throw std::runtime_error("irf_q: source and detector profiles are on different grids");

    const auto& f = source_profile.samples;
    const auto& r = detector_profile.samples;
    const double dt = source_profile.dt;
    const size_t n = f.size() + r.size() - 1;
    std::vector<double> q(n, 0.0);
    // q_k = dt * sum_j' R_{k-j} f_j with trapezoid end weights (q_0 is the
    // zero-width integral).
    for (size_t k = 1; k < n; ++k) {
        double acc = 0.0;
        const size_t j_lo = k + 1 >= r.size() ? k + 1 - r.size() : 0;
        const size_t j_hi = std::min(k, f.size() - 1);
        for (size_t j = j_lo; j <= j_hi; ++j) {
            const double w = (j == 0 || j == k) ? 0.5 : 1.0;
            acc += w * f[j] * r[k - j];
        }
        q[k] = dt * acc;
    }
    return InstrumentResponse::sampled(dt, std::move(q), source_profile.tau);
}

CapitalQ capital_Q(double t, const InstrumentResponse& q, double tau, const OpticalMedium& medium) {
    if (tau < 0.0) throw std::domain_error("capital_Q: negative lifetime");
    if (t < 0.0) throw std::domain_error("capital_Q: negative time");
    const double D = medium.D;
    if (q.is_delta()) {
        if (tau == 0.0) return {true, D};
        return {false, D / tau * std::exp(-t / tau)};
    }
    if (tau == 0.0) return {false, D * q.value_at(t)};
    // Trapezoid of (D/tau) exp(-t'/tau) q(t - t') on the q grid up to t.
    const double dt = q.dt;
    const auto n_cells = static_cast<size_t>(t / dt);
    double acc = 0.0;
    auto integrand = [&](double tp) { return std::exp(-tp / tau) * q.value_at(t - tp); };
    for (size_t j = 0; j < n_cells; ++j)
        acc += 0.5 * dt * (integrand(j * dt) + integrand((j + 1) * dt));
    const double t_last = n_cells * dt;
    if (t > t_last) acc += 0.5 * (t - t_last) * (integrand(t_last) + integrand(t));
    return {false, D / tau * acc};
}

QKernel::QKernel(const InstrumentResponse& q, const OpticalMedium& medium) {
    tau_ = q.tau;
    weight_ = medium.D;
    if (q.is_delta()) {
        kind_ = tau_ == 0.0 ? Kind::DeltaWeight : Kind::ExpDecay;
        return;
    }
    kind_ = Kind::Sampled;
    dt_ = q.dt;
    values_.resize(q.samples.size());
    for (size_t j = 0; j < values_.size(); ++j)
        values_[j] = capital_Q(j * dt_, q, tau_, medium).value;
}

double QKernel::at(double t) const {
    switch (kind_) {
        case Kind::DeltaWeight:
            throw std::logic_error("QKernel::at on a delta kernel");
        case Kind::ExpDecay:
            return weight_ / tau_ * std::exp(-t / tau_);
        case Kind::Sampled: {
            if (t < 0.0) return 0.0;
            const double u = t / dt_;
            const auto j = static_cast<size_t>(u);
            if (j + 1 >= values_.size())
                return j < values_.size() && u == static_cast<double>(j) ? values_[j] : 0.0;
            const double frac = u - static_cast<double>(j);
            return values_[j] * (1.0 - frac) + values_[j + 1] * frac;
        }
    }
    return 0.0;
}

}  // namespace fdot

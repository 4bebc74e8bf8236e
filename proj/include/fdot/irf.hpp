#pragma once

#include <vector>

#include "fdot/medium.hpp"

namespace fdot {

// Temporal profile on a uniform grid t_j = j * dt, or an ideal delta pulse.
// When used as the combined instrument response q, tau carries the
// fluorescence lifetime of the downstream emission kernel (tau = 0 means
// instantaneous decay).
struct InstrumentResponse {
    enum class Kind { Delta, Sampled };

    Kind kind = Kind::Delta;
    double dt = 0.0;               // grid spacing [ps], Sampled only
    std::vector<double> samples;   // nonnegative weights, Sampled only
    double tau = 0.0;              // fluorescence lifetime [ps]

    static InstrumentResponse delta(double tau = 0.0) {
        InstrumentResponse r;
        r.kind = Kind::Delta;
        r.tau = tau;
        return r;
    }
    static InstrumentResponse sampled(double dt, std::vector<double> samples, double tau = 0.0);

    bool is_delta() const { return kind == Kind::Delta; }
    // Linear interpolation on the grid; zero outside [0, (n-1) dt].
    double value_at(double t) const;
};

// Instrument response q(t) = int_0^t R(t-s) f(s) ds by causal trapezoidal
// convolution; a delta on either side acts as the convolution identity.
InstrumentResponse irf_q(const InstrumentResponse& source_profile,
                         const InstrumentResponse& detector_profile);

// Value of Q(t) = (D/tau) int_0^t exp(-t'/tau) q(t-t') dt'. For tau = 0 the
// exponential kernel is a delta sequence, so Q = D q; when q is itself a
// delta the result is a delta of weight D and the flag below is set so the
// caller can collapse the outer time integral analytically.
struct CapitalQ {
    bool is_delta = false;
    double value = 0.0;  // delta weight when is_delta, Q(t) otherwise
};

CapitalQ capital_Q(double t, const InstrumentResponse& q, double tau, const OpticalMedium& medium);

// Precomputed evaluator used by the forward operators.
class QKernel {
public:
    enum class Kind { DeltaWeight, ExpDecay, Sampled };

    QKernel(const InstrumentResponse& q, const OpticalMedium& medium);

    Kind kind() const { return kind_; }
    double delta_weight() const { return weight_; }
    double at(double t) const;  // ExpDecay / Sampled only

    // Sampled grid accessors for trapezoidal outer integrals.
    double grid_dt() const { return dt_; }
    const std::vector<double>& grid_values() const { return values_; }

private:
    Kind kind_;
    double weight_ = 0.0;  // D
    double tau_ = 0.0;
    double dt_ = 0.0;
    std::vector<double> values_;  // Q on the q grid, Sampled only
};

}  // namespace fdot

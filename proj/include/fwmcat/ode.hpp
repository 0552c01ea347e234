#pragma once

#include <functional>

#include "fwmcat/sparse_operator.hpp"

namespace fwmcat {

struct OdeTolerances {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_min = 1e-14;   // relative to the integration span
    double h_max = 0.0;     // 0: unbounded
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;

    OdeStats& operator+=(const OdeStats& o) {
        accepted += o.accepted;
        rejected += o.rejected;
        rhs_evals += o.rhs_evals;
        return *this;
    }
};

/**
 * Dormand-Prince 5(4) stepper for complex vector ODEs y' = f(t, y), with
 * FSAL reuse, PI-free elementary step control and the fourth-order
 * continuous extension for output between accepted steps.
 */
class Dopri5 {
public:
    using Rhs = std::function<void(double t, const VectorC& y, VectorC& dydt)>;

    Dopri5(Rhs rhs, OdeTolerances tol = {});

    /// Restarts integration at (t, y); picks a fresh initial step.
    void reset(double t, const VectorC& y);
    /// Takes one accepted step that does not pass `t_limit`.
    void step(double t_limit);
    /// Advances (possibly many steps) until time() == t_end.
    void advance_to(double t_end);

    /// Multiplies the state, its stored derivative and the dense output by s.
    /// Exact continuation only for right-hand sides linear in y.
    void scale_state(cplx s);

    /// Dense output on [previous_time(), time()].
    void interpolate(double t, VectorC& out) const;

    double time() const { return t_; }
    double previous_time() const { return t_prev_; }
    const VectorC& state() const { return y_; }
    const OdeStats& stats() const { return stats_; }

private:
    double initial_step(double direction_span) const;
    double error_norm(const VectorC& err, const VectorC& y0, const VectorC& y1) const;

    Rhs rhs_;
    OdeTolerances tol_;
    double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0, t0_ = 0.0;
    VectorC y_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, err_;
    // continuous extension coefficients of the last accepted step
    VectorC r1_, r2_, r3_, r4_, r5_;
    OdeStats stats_;
};

}  // namespace fwmcat

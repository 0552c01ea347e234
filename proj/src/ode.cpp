#include "fwmcat/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fwmcat/errors.hpp"

namespace fwmcat {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

}  // namespace

Dopri5::Dopri5(Rhs rhs, OdeTolerances tol) : rhs_(std::move(rhs)), tol_(tol) {}

double Dopri5::error_norm(const VectorC& err, const VectorC& y0, const VectorC& y1) const {
    double acc = 0.0;
    const auto n = err.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = tol_.atol + tol_.rtol * std::sqrt(std::max(std::norm(y0[i]), std::norm(y1[i])));
        const double r2 = std::norm(err[i]) / (sc * sc);
        acc += r2;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
}

double Dopri5::initial_step(double span) const {
    const auto n = static_cast<double>(std::max<Eigen::Index>(y_.size(), 1));
    double d0 = 0, d1n = 0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
        const double sc = tol_.atol + tol_.rtol * std::abs(y_[i]);
        d0 += std::norm(y_[i]) / (sc * sc);
        d1n += std::norm(k1_[i]) / (sc * sc);
    }
    d0 = std::sqrt(d0 / n);
    d1n = std::sqrt(d1n / n);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);
    if (d1n <= 1e-15) return std::max(1e-6, std::min(span, 100 * h0));
    const double h1 = std::pow(0.01 / d1n, 1.0 / 5.0);
    double h = std::min(100 * h0, h1);
    if (tol_.h_max > 0) h = std::min(h, tol_.h_max);
    return std::min(h, span);
}

void Dopri5::reset(double t, const VectorC& y) {
    t_ = t_prev_ = t0_ = t;
    y_ = y;
    const auto n = y.size();
    for (VectorC* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &err_}) v->resize(n);
    rhs_(t_, y_, k1_);
    ++stats_.rhs_evals;
    h_ = 0.0;
    r1_ = y_;
    r2_.setZero(n);
    r3_.setZero(n);
    r4_.setZero(n);
    r5_.setZero(n);
}

void Dopri5::step(double t_limit) {
    const double remaining = t_limit - t_;
    if (remaining <= 0) return;
    if (h_ <= 0) h_ = initial_step(remaining);
    const double h_floor = tol_.h_min * std::max(1.0, std::abs(t_limit - t0_));
    bool rejected_once = false;

    for (;;) {
        double h = std::min(h_, remaining);
        // Avoid a sliver step at the end of the interval.
        if (remaining - h < 1e-3 * h) h = remaining;
        if (h < h_floor) {
            std::ostringstream msg;
            msg << "Dopri5: step-size underflow at t=" << t_ << " (h=" << h << ", rtol=" << tol_.rtol
                << ", atol=" << tol_.atol << ")";
            throw NumericalError(msg.str());
        }

        ytmp_ = y_ + h * a21 * k1_;
        rhs_(t_ + c2 * h, ytmp_, k2_);
        ytmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
        rhs_(t_ + c3 * h, ytmp_, k3_);
        ytmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        rhs_(t_ + c4 * h, ytmp_, k4_);
        ytmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs_(t_ + c5 * h, ytmp_, k5_);
        ytmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs_(t_ + h, ytmp_, k6_);
        ynew_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
        rhs_(t_ + h, ynew_, k7_);
        stats_.rhs_evals += 6;

        err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        const double en = error_norm(err_, y_, ynew_);

        if (en <= 1.0) {
            // continuous extension
            r1_ = y_;
            r2_ = ynew_ - y_;
            r3_ = h * k1_ - r2_;
            r4_ = r2_ - h * k7_ - r3_;
            r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);

            t_prev_ = t_;
            t_ = (h == remaining) ? t_limit : t_ + h;
            y_.swap(ynew_);
            k1_.swap(k7_);
            ++stats_.accepted;

            double factor = en == 0.0 ? kMaxFactor : kSafety * std::pow(en, -0.2);
            factor = std::clamp(factor, kMinFactor, rejected_once ? 1.0 : kMaxFactor);
            h_ = h * factor;
            if (tol_.h_max > 0) h_ = std::min(h_, tol_.h_max);
            return;
        }
        ++stats_.rejected;
        rejected_once = true;
        h_ = h * std::max(kMinFactor, kSafety * std::pow(en, -0.2));
    }
}

void Dopri5::advance_to(double t_end) {
    while (t_ < t_end) step(t_end);
}

void Dopri5::scale_state(cplx s) {
    y_ *= s;
    k1_ *= s;
    r1_ *= s;
    r2_ *= s;
    r3_ *= s;
    r4_ *= s;
    r5_ *= s;
}

void Dopri5::interpolate(double t, VectorC& out) const {
    const double h = t_ - t_prev_;
    if (h <= 0) {
        out = y_;
        return;
    }
    const double theta = (t - t_prev_) / h;
    const double theta1 = 1.0 - theta;
    out = r1_ + theta * (r2_ + theta1 * (r3_ + theta * (r4_ + theta1 * r5_)));
}

}  // namespace fwmcat

#include "fwmcat/observables.hpp"

#include <cmath>
#include <sstream>

#include "fwmcat/errors.hpp"

namespace fwmcat {

ModeMoments& ModeMoments::operator+=(const ModeMoments& o) {
    n += o.n;
    n2 += o.n2;
    b_bdag += o.b_bdag;
    b += o.b;
    b2 += o.b2;
    return *this;
}

ModeMoments& ModeMoments::operator*=(double s) {
    n *= s;
    n2 *= s;
    b_bdag *= s;
    b *= s;
    b2 *= s;
    return *this;
}

ModeMoments moments(const MatrixC& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) throw ConfigError("moments: expected a square single-mode matrix");
    const Eigen::Index d = rho.rows();
    ModeMoments m;
    for (Eigen::Index k = 0; k < d; ++k) {
        const double p = rho(k, k).real();
        const auto kd = static_cast<double>(k);
        m.n += kd * p;
        m.n2 += kd * kd * p;
        if (k + 1 < d) m.b_bdag += (kd + 1) * p;
        if (k >= 1) m.b += std::sqrt(kd) * rho(k, k - 1);
        if (k >= 2) m.b2 += std::sqrt(kd * (kd - 1)) * rho(k, k - 2);
    }
    return m;
}

ModeMomentEvaluator::ModeMomentEvaluator(const FockSpace& space, std::size_t mode)
    : mode_(mode), top_(0) {
    if (mode >= space.mode_count()) throw ConfigError("ModeMomentEvaluator: invalid mode");
    top_ = space.max_occ()[mode];
    const std::size_t dim = space.dimension();
    occ_.resize(dim);
    sqrt1_.assign(dim, 0.0);
    sqrt2_.assign(dim, 0.0);
    down1_.assign(dim, -1);
    down2_.assign(dim, -1);
    std::vector<int> t(space.mode_count());
    for (std::size_t i = 0; i < dim; ++i) {
        const auto o = space.occupation(i);
        occ_[i] = o[mode];
        sqrt1_[i] = std::sqrt(static_cast<double>(o[mode]));
        sqrt2_[i] = std::sqrt(static_cast<double>(o[mode]) * (o[mode] - 1.0));
        t.assign(o.begin(), o.end());
        if (o[mode] >= 1) {
            t[mode] = o[mode] - 1;
            if (auto j = space.index_of(t)) down1_[i] = static_cast<std::ptrdiff_t>(*j);
        }
        if (o[mode] >= 2) {
            t[mode] = o[mode] - 2;
            if (auto j = space.index_of(t)) down2_[i] = static_cast<std::ptrdiff_t>(*j);
        }
    }
}

namespace {

// Re/Im of conj(u) * v without the NaN-recovery path of std::complex multiplication.
inline void add_conj_product(const cplx& u, const cplx& v, double w, double& re, double& im) {
    re += w * (u.real() * v.real() + u.imag() * v.imag());
    im += w * (u.real() * v.imag() - u.imag() * v.real());
}

}  // namespace

ModeMoments ModeMomentEvaluator::operator()(const VectorC& psi) const {
    double n = 0, n2 = 0, bb = 0, b_re = 0, b_im = 0, b2_re = 0, b2_im = 0;
    for (std::size_t i = 0; i < occ_.size(); ++i) {
        const cplx a = psi[static_cast<Eigen::Index>(i)];
        const double p = a.real() * a.real() + a.imag() * a.imag();
        const double k = occ_[i];
        n += k * p;
        n2 += k * k * p;
        if (occ_[i] < top_) bb += (k + 1) * p;
        if (down1_[i] >= 0) add_conj_product(psi[down1_[i]], a, sqrt1_[i], b_re, b_im);
        if (down2_[i] >= 0) add_conj_product(psi[down2_[i]], a, sqrt2_[i], b2_re, b2_im);
    }
    ModeMoments m;
    m.n = n;
    m.n2 = n2;
    m.b_bdag = bb;
    m.b = {b_re, b_im};
    m.b2 = {b2_re, b2_im};
    return m;
}

double mean_photon(const ModeMoments& m) { return m.n; }

QuadratureVariances quadrature_variances(const ModeMoments& m) {
    QuadratureVariances q;
    const double sym = 0.5 * (m.b_bdag + m.n);
    q.mean_x = std::sqrt(2.0) * m.b.real();
    q.mean_p = std::sqrt(2.0) * m.b.imag();
    q.var_x = m.b2.real() + sym - q.mean_x * q.mean_x;
    q.var_p = -m.b2.real() + sym - q.mean_p * q.mean_p;
    return q;
}

double fano(const ModeMoments& m) {
    if (!(m.n > 1e-12)) {
        std::ostringstream msg;
        msg << "Fano factor undefined for mean photon number " << m.n;
        throw UndefinedError(msg.str());
    }
    return (m.n2 - m.n * m.n) / m.n;
}

double mean_photon(const MatrixC& rho) { return moments(rho).n; }
QuadratureVariances quadrature_variances(const MatrixC& rho) { return quadrature_variances(moments(rho)); }
double fano(const MatrixC& rho) { return fano(moments(rho)); }

double mean_photon(const PureState& psi, std::size_t mode) { return ModeMomentEvaluator(*psi.space, mode)(psi.amplitudes).n; }
QuadratureVariances quadrature_variances(const PureState& psi, std::size_t mode) {
    return quadrature_variances(ModeMomentEvaluator(*psi.space, mode)(psi.amplitudes));
}
double fano(const PureState& psi, std::size_t mode) { return fano(ModeMomentEvaluator(*psi.space, mode)(psi.amplitudes)); }

std::vector<double> photon_distribution(const MatrixC& rho) {
    std::vector<double> p(static_cast<std::size_t>(rho.rows()));
    double total = 0;
    for (Eigen::Index k = 0; k < rho.rows(); ++k) {
        double v = rho(k, k).real();
        if (v < -1e-12) {
            std::ostringstream msg;
            msg << "photon_distribution: probability " << v << " at n=" << k << " is negative";
            throw NumericalError(msg.str());
        }
        v = std::max(0.0, v);
        p[static_cast<std::size_t>(k)] = v;
        total += v;
    }
    if (!(total > 0)) throw NumericalError("photon_distribution: zero total probability");
    for (auto& v : p) v /= total;
    return p;
}

std::vector<double> photon_distribution(const PureState& psi, std::size_t mode) {
    // Populations only need the diagonal, so skip the reduced matrix.
    if (mode >= psi.space->mode_count()) throw ConfigError("photon_distribution: invalid mode");
    MatrixC diag = MatrixC::Zero(static_cast<Eigen::Index>(psi.space->local_dim(mode)),
                                 static_cast<Eigen::Index>(psi.space->local_dim(mode)));
    for (std::size_t i = 0; i < psi.space->dimension(); ++i) {
        const auto k = psi.space->occupation(i, mode);
        diag(k, k) += std::norm(psi.amplitudes[static_cast<Eigen::Index>(i)]);
    }
    return photon_distribution(diag);
}

double schmidt_number(const PureState& psi, const std::vector<std::size_t>& keep) {
    return 1.0 / purity(reduced_matrix(*psi.space, psi.amplitudes, keep));
}

PhotonStatistics classify_fano(double ff, double tol) {
    if (ff < 1.0 - tol) return PhotonStatistics::sub_poissonian;
    if (ff > 1.0 + tol) return PhotonStatistics::super_poissonian;
    return PhotonStatistics::poissonian;
}

ModeStatistics mode_statistics(const MatrixC& rho) {
    ModeStatistics s;
    const auto m = moments(rho);
    s.n = m.n;
    s.quad = quadrature_variances(m);
    try {
        s.fano = fano(m);
    } catch (const UndefinedError&) {
        s.fano.reset();
    }
    s.distribution = photon_distribution(rho);
    return s;
}

}  // namespace fwmcat

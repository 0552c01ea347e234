#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's operator builders or solvers.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat ladder(int cap) {
    Mat a = Mat::Zero(cap + 1, cap + 1);
    for (int n = 1; n <= cap; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Mode `mode` ladder operator on the full product space, mode 0 most significant.
inline Mat product_ladder(const std::vector<int>& caps, std::size_t mode) {
    Mat out = Mat::Identity(1, 1);
    for (std::size_t j = 0; j < caps.size(); ++j) {
        out = kron(out, j == mode ? ladder(caps[j]) : Mat::Identity(caps[j] + 1, caps[j] + 1));
    }
    return out;
}

/// Product-space index of an occupation tuple (mode 0 most significant).
inline Eigen::Index product_index(const std::vector<int>& caps, const std::vector<int>& occ) {
    Eigen::Index idx = 0;
    for (std::size_t j = 0; j < caps.size(); ++j) idx = idx * (caps[j] + 1) + occ[j];
    return idx;
}

inline double poisson(double mean, int n) { return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0)); }

/// Normalized Hermite function psi_n(x) for the quadrature x = (b + b^dag)/sqrt 2.
inline double hermite_function(int n, double x) {
    double prev = 0.0;
    double cur = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    for (int k = 1; k <= n; ++k) {
        const double next = std::sqrt(2.0 / k) * x * cur - std::sqrt((k - 1.0) / k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// W(x,p) = (1/pi) int dy <x+y|rho|x-y> e^{-2ipy}, trapezoid rule on [-L, L].
inline double wigner_integral(const Mat& rho, double x, double p, double half_width = 12.0, int points = 4001) {
    const int d = static_cast<int>(rho.rows());
    const double h = 2 * half_width / (points - 1);
    cplx sum = 0.0;
    std::vector<double> u(d), v(d);
    for (int k = 0; k < points; ++k) {
        const double y = -half_width + k * h;
        for (int n = 0; n < d; ++n) {
            u[n] = hermite_function(n, x + y);
            v[n] = hermite_function(n, x - y);
        }
        cplx kernel = 0.0;
        for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n) kernel += u[m] * rho(m, n) * v[n];
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        sum += w * kernel * std::exp(cplx(0.0, -2.0 * p * y));
    }
    return (sum * h).real() / M_PI;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index d) {
    std::normal_distribution<double> n01;
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = cplx(n01(rng), n01(rng));
    return v.normalized();
}

inline Mat random_density(std::mt19937_64& rng, Eigen::Index d, int rank) {
    Mat rho = Mat::Zero(d, d);
    for (int r = 0; r < rank; ++r) {
        const Vec v = random_vector(rng, d);
        rho += v * v.adjoint();
    }
    return rho / rho.trace().real();
}

/// Tr sqrt(sqrt(rho) sigma sqrt(rho)), through eigendecompositions only.
inline double root_fidelity(const Mat& rho, const Mat& sigma) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Mat s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    Eigen::SelfAdjointEigenSolver<Mat> inner(s * sigma * s);
    return inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace oracle

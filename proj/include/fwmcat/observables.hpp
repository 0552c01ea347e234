#pragma once

#include <optional>
#include <vector>

#include "fwmcat/states.hpp"

namespace fwmcat {

/**
 * Linear single-mode moments. Everything the photon-statistics and
 * quadrature diagnostics need is a linear functional of rho, so moments of
 * an ensemble are averages of per-member moments.
 *
 * Quadratures follow x = (b + b^dag)/sqrt2, p = -i(b - b^dag)/sqrt2; b b^dag
 * is taken on the truncated single-mode space (zero on the top level).
 */
struct ModeMoments {
    double n = 0;        // <b^dag b>
    double n2 = 0;       // <(b^dag b)^2>
    double b_bdag = 0;   // <b b^dag>
    cplx b{};            // <b>
    cplx b2{};           // <b^2>

    ModeMoments& operator+=(const ModeMoments& o);
    ModeMoments& operator*=(double s);
};

struct QuadratureVariances {
    double var_x = 0, var_p = 0;
    double mean_x = 0, mean_p = 0;
};

ModeMoments moments(const MatrixC& rho_mode);

/// Evaluates ModeMoments of one mode directly from full-space amplitude vectors.
class ModeMomentEvaluator {
public:
    ModeMomentEvaluator(const FockSpace& space, std::size_t mode);
    ModeMoments operator()(const VectorC& psi) const;

private:
    std::size_t mode_;
    int top_;
    std::vector<int> occ_;              // n_mode per basis index
    std::vector<double> sqrt1_, sqrt2_;  // sqrt(n), sqrt(n (n - 1))
    std::vector<std::ptrdiff_t> down1_;  // index with n_mode - 1, or -1
    std::vector<std::ptrdiff_t> down2_;  // index with n_mode - 2, or -1
};

double mean_photon(const ModeMoments& m);
QuadratureVariances quadrature_variances(const ModeMoments& m);
/// (<n^2> - <n>^2) / <n>; throws UndefinedError when <n> <= 1e-12.
double fano(const ModeMoments& m);

double mean_photon(const MatrixC& rho_mode);
double mean_photon(const PureState& psi, std::size_t mode);
QuadratureVariances quadrature_variances(const MatrixC& rho_mode);
QuadratureVariances quadrature_variances(const PureState& psi, std::size_t mode);
double fano(const MatrixC& rho_mode);
double fano(const PureState& psi, std::size_t mode);

/// P(n) = <n|rho|n>; entries >= -1e-12 are clamped to 0 and renormalized, below that NumericalError.
std::vector<double> photon_distribution(const MatrixC& rho_mode);
std::vector<double> photon_distribution(const PureState& psi, std::size_t mode);

/// 1 / Tr[rho_keep^2] for a global pure state; `keep` names one side of the bipartition.
double schmidt_number(const PureState& psi, const std::vector<std::size_t>& keep);

enum class PhotonStatistics { sub_poissonian, poissonian, super_poissonian };
PhotonStatistics classify_fano(double ff, double tol = 1e-3);

/// Per-mode summary at one time.
struct ModeStatistics {
    double n = 0;
    QuadratureVariances quad;
    std::optional<double> fano;   // nullopt when undefined
    std::vector<double> distribution;
};

ModeStatistics mode_statistics(const MatrixC& rho_mode);

}  // namespace fwmcat

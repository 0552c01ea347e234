#pragma once

#include <string>
#include <vector>

#include "fwmcat/fock_space.hpp"
#include "fwmcat/sparse_operator.hpp"

namespace fwmcat {

/// Normalized amplitude vector over a FockSpace.
struct PureState {
    FockSpacePtr space;
    VectorC amplitudes;
    /// Probability mass dropped by truncation before renormalization.
    double truncation_loss = 0.0;

    double norm() const { return amplitudes.norm(); }
};

/**
 * Density matrix over either a full FockSpace (`space` set, `modes` = all
 * modes) or a product basis of selected modes (`space` null, `local_dims`
 * giving max_occ + 1 of each kept mode, mode 0 most significant).
 */
struct DensityMatrix {
    MatrixC matrix;
    std::vector<std::size_t> modes;       // original mode labels, 0-based
    std::vector<std::size_t> local_dims;  // product-basis factors (reduced matrices)
    FockSpacePtr space;                   // non-null for full-system matrices
    std::string label;

    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
    double trace() const { return matrix.trace().real(); }
    /// Single-mode reduced matrix.
    bool single_mode() const { return space == nullptr && modes.size() == 1; }
};

/// |alpha_1> x |alpha_2> x ... over the space; modes with alpha = 0 are vacuum.
/// Throws NumericalError if the truncation discards more than `max_loss` of the norm.
PureState coherent_product_state(FockSpacePtr space, const std::vector<cplx>& alphas, double max_loss = 1e-4);

/// Basis vector |n_1,...,n_m>.
PureState fock_state(FockSpacePtr space, const std::vector<int>& occupation);

PureState normalized(PureState psi);

DensityMatrix to_density(const PureState& psi);

/// Single-mode density matrix from explicit matrix (validated).
DensityMatrix make_single_mode_density(MatrixC matrix, std::size_t mode = 0, std::string label = {});

/// Reduced density matrix over the kept modes. Reduced inputs are traced on their product basis.
DensityMatrix partial_trace(const PureState& psi, const std::vector<std::size_t>& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep);

/// Reduced density matrix from a raw amplitude vector (need not be normalized).
MatrixC reduced_matrix(const FockSpace& space, const VectorC& amplitudes, const std::vector<std::size_t>& keep);

/// Precomputed index bookkeeping for repeated partial traces over the same subset.
class PartialTracer {
public:
    PartialTracer(const FockSpace& space, std::vector<std::size_t> keep);

    std::size_t kept_dim() const { return kept_dim_; }
    const std::vector<std::size_t>& keep() const { return keep_; }
    const std::vector<std::size_t>& local_dims() const { return local_dims_; }

    /// rho += |psi><psi| traced down to the kept modes.
    void accumulate(const VectorC& psi, MatrixC& rho, double weight = 1.0) const;
    MatrixC operator()(const VectorC& psi) const;
    MatrixC operator()(const MatrixC& full) const;

private:
    std::size_t dim_;
    std::vector<std::size_t> keep_;
    std::vector<std::size_t> local_dims_;
    std::size_t kept_dim_ = 1;
    std::vector<std::size_t> kept_code_;
    std::vector<std::vector<std::size_t>> groups_;   // members sorted by kept code
    std::vector<std::ptrdiff_t> block_start_;         // first kept code when the codes are consecutive, else -1
};

double purity(const DensityMatrix& rho);
double purity(const MatrixC& rho);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const MatrixC& rho, const MatrixC& sigma);
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
/// Tr sqrt(sqrt(rho) sigma sqrt(rho)), the square root of fidelity().
double root_fidelity(const MatrixC& rho, const MatrixC& sigma);
/// <psi|sigma|psi> for a pure state psi in the same basis as sigma.
double fidelity_pure(const VectorC& psi, const MatrixC& sigma);

/// 0.5 * ||rho - sigma||_1
double trace_distance(const MatrixC& rho, const MatrixC& sigma);

/// Hermitian PSD square root; eigenvalues below -tol * max(1, lambda_max) raise NumericalError.
MatrixC psd_sqrt(const MatrixC& m, double tol = 1e-10);

/// Checks Hermiticity (1e-10), unit trace (1e-8) and PSD (-1e-8); throws NumericalError otherwise.
void validate_density(const MatrixC& m);

}  // namespace fwmcat

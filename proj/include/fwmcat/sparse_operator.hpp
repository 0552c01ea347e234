#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace fwmcat {

using cplx = std::complex<double>;
using VectorC = Eigen::VectorXcd;
using MatrixC = Eigen::MatrixXcd;
using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct Triplet {
    std::size_t row;
    std::size_t col;
    cplx value;
};

/// Complex sparse operator over a Fock basis (compressed row storage).
class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(std::size_t dim, const std::vector<Triplet>& entries, bool hermitian_hint = false);
    SparseOperator(SparseMatrixC matrix, bool hermitian_hint);

    static SparseOperator identity(std::size_t dim);
    static SparseOperator diagonal(const Eigen::VectorXd& diag);

    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
    std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }
    bool hermitian_hint() const { return hermitian_; }
    const SparseMatrixC& matrix() const { return matrix_; }

    /// out = A * in
    void apply(const VectorC& in, VectorC& out) const;
    VectorC operator*(const VectorC& v) const;

    SparseOperator adjoint() const;
    /// max_{ij} |A_ij - conj(A_ji)|
    double max_asymmetry() const;
    /// max_{ij} |A_ij|
    double max_abs() const;
    bool is_diagonal() const;
    MatrixC to_dense() const { return MatrixC(matrix_); }
    std::vector<Triplet> triplets() const;

    /// Expectation value <psi|A|psi>.
    cplx expectation(const VectorC& psi) const;

    friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator*(cplx s, const SparseOperator& a);

private:
    SparseMatrixC matrix_;
    bool hermitian_ = false;
};

/// [A, B] = AB - BA
SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);

/// Writes the `%%sparse complex` triplet text format (0-based `row col re im`).
void write_triplets(std::ostream& os, const SparseOperator& op);
SparseOperator read_triplets(std::istream& is, bool hermitian_hint = false);

}  // namespace fwmcat

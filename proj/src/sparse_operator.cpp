#include "fwmcat/sparse_operator.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "fwmcat/errors.hpp"

namespace fwmcat {

SparseOperator::SparseOperator(std::size_t dim, const std::vector<Triplet>& entries, bool hermitian_hint)
    : matrix_(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)), hermitian_(hermitian_hint) {
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.row >= dim || e.col >= dim) throw ConfigError("SparseOperator: entry index out of range");
        trips.emplace_back(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col), e.value);
    }
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();
}

SparseOperator::SparseOperator(SparseMatrixC matrix, bool hermitian_hint)
    : matrix_(std::move(matrix)), hermitian_(hermitian_hint) {
    matrix_.makeCompressed();
}

SparseOperator SparseOperator::identity(std::size_t dim) {
    SparseMatrixC m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setIdentity();
    return SparseOperator(std::move(m), true);
}

SparseOperator SparseOperator::diagonal(const Eigen::VectorXd& diag) {
    const auto n = diag.size();
    SparseMatrixC m(n, n);
    m.reserve(Eigen::VectorXi::Constant(n, 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (diag[i] != 0.0) m.insert(i, i) = diag[i];
    }
    return SparseOperator(std::move(m), true);
}

void SparseOperator::apply(const VectorC& in, VectorC& out) const { out.noalias() = matrix_ * in; }

VectorC SparseOperator::operator*(const VectorC& v) const {
    VectorC out(matrix_.rows());
    apply(v, out);
    return out;
}

SparseOperator SparseOperator::adjoint() const {
    SparseMatrixC adj = matrix_.adjoint();
    return SparseOperator(std::move(adj), hermitian_);
}

double SparseOperator::max_asymmetry() const {
    SparseMatrixC diff = matrix_ - SparseMatrixC(matrix_.adjoint());
    double worst = 0.0;
    for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

double SparseOperator::max_abs() const {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(matrix_, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

bool SparseOperator::is_diagonal() const {
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(matrix_, k); it; ++it) {
            if (it.row() != it.col() && it.value() != cplx{}) return false;
        }
    }
    return true;
}

std::vector<Triplet> SparseOperator::triplets() const {
    std::vector<Triplet> out;
    out.reserve(nonzeros());
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(matrix_, k); it; ++it) {
            out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value()});
        }
    }
    return out;
}

cplx SparseOperator::expectation(const VectorC& psi) const { return psi.dot(matrix_ * psi); }

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    if (a.dim() != b.dim()) throw ConfigError("SparseOperator: dimension mismatch in sum");
    return SparseOperator(SparseMatrixC(a.matrix_ + b.matrix_), a.hermitian_ && b.hermitian_);
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    if (a.dim() != b.dim()) throw ConfigError("SparseOperator: dimension mismatch in difference");
    return SparseOperator(SparseMatrixC(a.matrix_ - b.matrix_), a.hermitian_ && b.hermitian_);
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    if (a.dim() != b.dim()) throw ConfigError("SparseOperator: dimension mismatch in product");
    SparseMatrixC prod = (a.matrix_ * b.matrix_).pruned();
    return SparseOperator(std::move(prod), false);
}

SparseOperator operator*(cplx s, const SparseOperator& a) {
    return SparseOperator(SparseMatrixC(s * a.matrix_), a.hermitian_ && s.imag() == 0.0);
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
    SparseMatrixC c = (a.matrix() * b.matrix()).pruned() - (b.matrix() * a.matrix()).pruned();
    return SparseOperator(std::move(c), false);
}

void write_triplets(std::ostream& os, const SparseOperator& op) {
    os << "%%sparse complex\n";
    os << "% dim " << op.dim() << '\n';
    char buf[128];
    for (const auto& t : op.triplets()) {
        std::snprintf(buf, sizeof buf, "%zu %zu %.17g %.17g\n", t.row, t.col, t.value.real(), t.value.imag());
        os << buf;
    }
}

SparseOperator read_triplets(std::istream& is, bool hermitian_hint) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%sparse complex", 0) != 0) {
        throw ConfigError("read_triplets: missing '%%sparse complex' header");
    }
    std::vector<Triplet> entries;
    std::size_t dim = 0;
    bool have_dim = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '%') {
            std::istringstream ls(line.substr(1));
            std::string key;
            if (ls >> key && key == "dim" && ls >> dim) have_dim = true;
            continue;
        }
        std::istringstream ls(line);
        Triplet t{};
        double re = 0, im = 0;
        if (!(ls >> t.row >> t.col >> re >> im)) throw ConfigError("read_triplets: malformed line: " + line);
        t.value = {re, im};
        entries.push_back(t);
        if (!have_dim) dim = std::max({dim, t.row + 1, t.col + 1});
    }
    return SparseOperator(dim, entries, hermitian_hint);
}

}  // namespace fwmcat

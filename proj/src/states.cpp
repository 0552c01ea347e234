#include "fwmcat/states.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fwmcat/errors.hpp"

namespace fwmcat {

namespace {

// Reduced matrices live on the product basis of their modes (first mode most significant).
DensityMatrix trace_product_basis(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
    const auto& dims = rho.local_dims;
    if (dims.size() != rho.modes.size() || dims.empty()) {
        throw ConfigError("partial_trace: reduced matrix lacks its mode layout");
    }
    std::vector<std::size_t> sorted = keep;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("partial_trace: keep must be a non-empty set of distinct modes");
    }
    std::vector<bool> kept(dims.size(), false);
    for (auto m : sorted) {
        auto it = std::find(rho.modes.begin(), rho.modes.end(), m);
        if (it == rho.modes.end()) throw ConfigError("partial_trace: mode " + std::to_string(m) + " is not present");
        kept[static_cast<std::size_t>(it - rho.modes.begin())] = true;
    }
    std::size_t total = 1, kept_dim = 1;
    for (std::size_t j = 0; j < dims.size(); ++j) {
        total *= dims[j];
        if (kept[j]) kept_dim *= dims[j];
    }
    if (static_cast<std::size_t>(rho.matrix.rows()) != total) throw ConfigError("partial_trace: layout does not match matrix size");

    // Split each product index into (kept part, traced part).
    std::vector<std::size_t> k_index(total), t_index(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rest = i, k = 0, t = 0, k_scale = 1, t_scale = 1;
        for (std::size_t j = dims.size(); j-- > 0;) {
            const std::size_t digit = rest % dims[j];
            rest /= dims[j];
            if (kept[j]) {
                k += digit * k_scale;
                k_scale *= dims[j];
            } else {
                t += digit * t_scale;
                t_scale *= dims[j];
            }
        }
        k_index[i] = k;
        t_index[i] = t;
    }
    DensityMatrix out;
    out.matrix = MatrixC::Zero(static_cast<Eigen::Index>(kept_dim), static_cast<Eigen::Index>(kept_dim));
    for (std::size_t r = 0; r < total; ++r) {
        for (std::size_t c = 0; c < total; ++c) {
            if (t_index[r] == t_index[c]) out.matrix(k_index[r], k_index[c]) += rho.matrix(r, c);
        }
    }
    for (std::size_t j = 0; j < dims.size(); ++j) {
        if (kept[j]) {
            out.modes.push_back(rho.modes[j]);
            out.local_dims.push_back(dims[j]);
        }
    }
    out.label = "reduced";
    return out;
}

std::vector<cplx> coherent_amplitudes(cplx alpha, int max_n) {
    std::vector<cplx> c(static_cast<std::size_t>(max_n) + 1);
    c[0] = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= max_n; ++n) c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    return c;
}

}  // namespace

PureState coherent_product_state(FockSpacePtr space, const std::vector<cplx>& alphas, double max_loss) {
    if (!space) throw ConfigError("coherent_product_state: null space");
    if (alphas.size() != space->mode_count()) {
        throw ConfigError("coherent_product_state: need one alpha per mode");
    }
    std::vector<std::vector<cplx>> per_mode;
    for (std::size_t j = 0; j < alphas.size(); ++j) per_mode.push_back(coherent_amplitudes(alphas[j], space->max_occ()[j]));

    PureState psi{space, VectorC(static_cast<Eigen::Index>(space->dimension())), 0.0};
    for (std::size_t i = 0; i < space->dimension(); ++i) {
        const auto occ = space->occupation(i);
        cplx a = 1.0;
        for (std::size_t j = 0; j < occ.size(); ++j) a *= per_mode[j][static_cast<std::size_t>(occ[j])];
        psi.amplitudes[static_cast<Eigen::Index>(i)] = a;
    }
    const double kept = psi.amplitudes.squaredNorm();
    psi.truncation_loss = std::max(0.0, 1.0 - kept);
    if (psi.truncation_loss > max_loss) {
        std::ostringstream msg;
        msg << "coherent_product_state: truncation discards probability " << psi.truncation_loss
            << " (limit " << max_loss << "); raise max_occ or total_cap";
        throw NumericalError(msg.str());
    }
    psi.amplitudes /= std::sqrt(kept);
    return psi;
}

PureState fock_state(FockSpacePtr space, const std::vector<int>& occupation) {
    const auto idx = space->index_of(occupation);
    if (!idx) throw ConfigError("fock_state: occupation outside the truncated space");
    PureState psi{space, VectorC::Zero(static_cast<Eigen::Index>(space->dimension())), 0.0};
    psi.amplitudes[static_cast<Eigen::Index>(*idx)] = 1.0;
    return psi;
}

PureState normalized(PureState psi) {
    const double n = psi.amplitudes.norm();
    if (n == 0.0) throw NumericalError("normalized: zero vector");
    psi.amplitudes /= n;
    return psi;
}

DensityMatrix to_density(const PureState& psi) {
    DensityMatrix rho;
    rho.matrix = psi.amplitudes * psi.amplitudes.adjoint();
    rho.space = psi.space;
    rho.modes.resize(psi.space->mode_count());
    std::iota(rho.modes.begin(), rho.modes.end(), 0);
    rho.label = "full";
    return rho;
}

DensityMatrix make_single_mode_density(MatrixC matrix, std::size_t mode, std::string label) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) throw ConfigError("density matrix must be square");
    validate_density(matrix);
    DensityMatrix rho;
    rho.local_dims = {static_cast<std::size_t>(matrix.rows())};
    rho.matrix = std::move(matrix);
    rho.modes = {mode};
    rho.label = std::move(label);
    return rho;
}

PartialTracer::PartialTracer(const FockSpace& space, std::vector<std::size_t> keep)
    : dim_(space.dimension()), keep_(std::move(keep)) {
    const std::size_t m = space.mode_count();
    if (keep_.empty() || keep_.size() >= m) throw ConfigError("partial_trace: keep must be a non-empty proper subset");
    std::vector<bool> is_kept(m, false);
    for (auto k : keep_) {
        if (k >= m) throw ConfigError("partial_trace: mode index out of range");
        if (is_kept[k]) throw ConfigError("partial_trace: duplicate mode in keep");
        is_kept[k] = true;
    }
    std::sort(keep_.begin(), keep_.end());
    for (auto k : keep_) {
        local_dims_.push_back(space.local_dim(k));
        kept_dim_ *= space.local_dim(k);
    }

    kept_code_.resize(dim_);
    std::vector<std::size_t> complement(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        const auto occ = space.occupation(i);
        std::size_t kc = 0, cc = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (is_kept[j]) {
                kc = kc * space.local_dim(j) + static_cast<std::size_t>(occ[j]);
            } else {
                cc = cc * space.local_dim(j) + static_cast<std::size_t>(occ[j]);
            }
        }
        kept_code_[i] = kc;
        complement[i] = cc;
    }
    std::vector<std::size_t> order(dim_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return complement[a] < complement[b]; });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (pos == 0 || complement[order[pos]] != complement[order[pos - 1]]) groups_.emplace_back();
        groups_.back().push_back(order[pos]);
    }
    for (auto& group : groups_) {
        std::sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) { return kept_code_[a] < kept_code_[b]; });
        bool consecutive = true;
        for (std::size_t q = 1; q < group.size(); ++q) consecutive &= kept_code_[group[q]] == kept_code_[group[0]] + q;
        block_start_.push_back(consecutive ? static_cast<std::ptrdiff_t>(kept_code_[group[0]]) : -1);
    }
}

void PartialTracer::accumulate(const VectorC& psi, MatrixC& rho, double weight) const {
    if (static_cast<std::size_t>(psi.size()) != dim_) throw ConfigError("partial_trace: dimension mismatch");
    VectorC gathered;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        const auto& group = groups_[gi];
        if (block_start_[gi] >= 0) {
            const auto len = static_cast<Eigen::Index>(group.size());
            gathered.resize(len);
            for (Eigen::Index q = 0; q < len; ++q) gathered[q] = psi[static_cast<Eigen::Index>(group[q])];
            const Eigen::Index k0 = block_start_[gi];
            for (Eigen::Index c = 0; c < len; ++c) {
                const cplx wc = weight * std::conj(gathered[c]);
                const double wr = wc.real(), wi = wc.imag();
                double* col = reinterpret_cast<double*>(&rho(k0, k0 + c));
                const double* g = reinterpret_cast<const double*>(gathered.data());
                for (Eigen::Index r = 0; r < len; ++r) {
                    col[2 * r] += g[2 * r] * wr - g[2 * r + 1] * wi;
                    col[2 * r + 1] += g[2 * r] * wi + g[2 * r + 1] * wr;
                }
            }
            continue;
        }
        for (auto i : group) {
            const cplx ai = weight * psi[static_cast<Eigen::Index>(i)];
            if (ai == cplx{}) continue;
            const auto ki = static_cast<Eigen::Index>(kept_code_[i]);
            for (auto j : group) {
                rho(ki, static_cast<Eigen::Index>(kept_code_[j])) += ai * std::conj(psi[static_cast<Eigen::Index>(j)]);
            }
        }
    }
}

MatrixC PartialTracer::operator()(const VectorC& psi) const {
    MatrixC rho = MatrixC::Zero(static_cast<Eigen::Index>(kept_dim_), static_cast<Eigen::Index>(kept_dim_));
    accumulate(psi, rho);
    return rho;
}

MatrixC PartialTracer::operator()(const MatrixC& full) const {
    if (static_cast<std::size_t>(full.rows()) != dim_) throw ConfigError("partial_trace: dimension mismatch");
    MatrixC rho = MatrixC::Zero(static_cast<Eigen::Index>(kept_dim_), static_cast<Eigen::Index>(kept_dim_));
    for (const auto& group : groups_) {
        for (auto i : group) {
            for (auto j : group) {
                rho(static_cast<Eigen::Index>(kept_code_[i]), static_cast<Eigen::Index>(kept_code_[j])) +=
                    full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }
    return rho;
}

MatrixC reduced_matrix(const FockSpace& space, const VectorC& amplitudes, const std::vector<std::size_t>& keep) {
    return PartialTracer(space, keep)(amplitudes);
}

DensityMatrix partial_trace(const PureState& psi, const std::vector<std::size_t>& keep) {
    const PartialTracer tracer(*psi.space, keep);
    DensityMatrix rho;
    rho.matrix = tracer(psi.amplitudes);
    rho.modes = tracer.keep();
    rho.local_dims = tracer.local_dims();
    rho.label = "reduced";
    return rho;
}

DensityMatrix partial_trace(const DensityMatrix& full, const std::vector<std::size_t>& keep) {
    if (!full.space) return trace_product_basis(full, keep);
    const PartialTracer tracer(*full.space, keep);
    DensityMatrix rho;
    rho.matrix = tracer(full.matrix);
    rho.modes = tracer.keep();
    rho.local_dims = tracer.local_dims();
    rho.label = "reduced";
    return rho;
}

double purity(const MatrixC& rho) {
    // Tr(rho^2) = sum_ij |rho_ij|^2 for Hermitian rho.
    return rho.cwiseAbs2().sum();
}

double purity(const DensityMatrix& rho) { return purity(rho.matrix); }

MatrixC psd_sqrt(const MatrixC& m, double tol) {
    const MatrixC herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixC> es(herm);
    if (es.info() != Eigen::Success) throw NumericalError("psd_sqrt: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.maxCoeff());
    if (ev.minCoeff() < -tol * scale) {
        std::ostringstream msg;
        msg << "psd_sqrt: matrix has eigenvalue " << ev.minCoeff() << " below tolerance";
        throw NumericalError(msg.str());
    }
    // Eigenvalues at round-off level are zeros; their square roots would not be.
    const double noise = static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * scale;
    ev = (ev.array() > noise).select(ev.cwiseSqrt(), 0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const MatrixC& rho, const MatrixC& sigma) {
    const double root = root_fidelity(rho, sigma);
    return root * root;
}

double root_fidelity(const MatrixC& rho, const MatrixC& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw ConfigError("fidelity: dimension mismatch");
    // Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the sum of singular values of sqrt(rho) sqrt(sigma).
    const MatrixC product = psd_sqrt(rho) * psd_sqrt(sigma);
    Eigen::BDCSVD<MatrixC> svd(product);
    if (svd.info() != Eigen::Success) throw NumericalError("fidelity: singular value decomposition failed");
    return svd.singularValues().sum();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) { return fidelity(rho.matrix, sigma.matrix); }

double fidelity_pure(const VectorC& psi, const MatrixC& sigma) {
    if (psi.size() != sigma.rows()) throw ConfigError("fidelity_pure: dimension mismatch");
    return psi.dot(sigma * psi).real();
}

double trace_distance(const MatrixC& rho, const MatrixC& sigma) {
    if (rho.rows() != sigma.rows()) throw ConfigError("trace_distance: dimension mismatch");
    const MatrixC d = rho - sigma;
    Eigen::SelfAdjointEigenSolver<MatrixC> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

void validate_density(const MatrixC& m) {
    if (m.rows() != m.cols()) throw NumericalError("density matrix must be square");
    const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw NumericalError("density matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > 1e-8) throw NumericalError("density matrix trace " + std::to_string(tr) + " != 1");
    Eigen::SelfAdjointEigenSolver<MatrixC> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) throw NumericalError("density matrix has negative eigenvalues");
}

}  // namespace fwmcat

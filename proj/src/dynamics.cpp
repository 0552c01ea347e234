#include "fwmcat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fwmcat/errors.hpp"

namespace fwmcat {

namespace {

const cplx kI{0.0, 1.0};

SparseOperator sector_block(const SparseOperator& h, std::size_t begin, std::size_t end) {
    std::vector<Triplet> entries;
    const auto& m = h.matrix();
    for (auto r = static_cast<Eigen::Index>(begin); r < static_cast<Eigen::Index>(end); ++r) {
        for (SparseMatrixC::InnerIterator it(m, r); it; ++it) {
            entries.push_back({static_cast<std::size_t>(r) - begin, static_cast<std::size_t>(it.col()) - begin, it.value()});
        }
    }
    return SparseOperator(end - begin, entries, h.hermitian_hint());
}

// Integrates psi' = -i H psi through the grid, writing one column per grid time.
OdeStats integrate_block(const SparseOperator& h, const VectorC& psi0, const std::vector<double>& grid,
                         const OdeTolerances& tol, std::vector<VectorC>& out, double& max_correction) {
    Dopri5 solver(
        [&h](double, const VectorC& y, VectorC& dy) {
            h.apply(y, dy);
            dy *= -kI;
        },
        tol);
    solver.reset(grid.front(), psi0);
    out.assign(grid.size(), VectorC());
    out[0] = psi0;
    const double norm0 = psi0.norm();
    for (std::size_t k = 1; k < grid.size(); ++k) {
        solver.advance_to(grid[k]);
        const double ratio = solver.state().norm() / norm0;
        max_correction = std::max(max_correction, std::abs(ratio - 1.0));
        solver.scale_state(1.0 / ratio);
        out[k] = solver.state();
    }
    return solver.stats();
}

double infinity_norm(const SparseOperator& h) {
    double worst = 0.0;
    const auto& m = h.matrix();
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        double row = 0.0;
        for (SparseMatrixC::InnerIterator it(m, r); it; ++it) row += std::abs(it.value());
        worst = std::max(worst, row);
    }
    return worst;
}

}  // namespace

std::vector<double> uniform_grid(double tau_max, double step) {
    if (!(step > 0) || !(tau_max >= step)) throw ConfigError("uniform_grid: need step > 0 and tau_max >= step");
    const auto n = static_cast<std::size_t>(std::floor(tau_max / step + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k) grid[k] = static_cast<double>(k) * step;
    return grid;
}

void validate_grid(const std::vector<double>& tau_grid) {
    if (tau_grid.empty() || tau_grid.front() != 0.0) throw ConfigError("tau grid must start at 0");
    for (std::size_t k = 1; k < tau_grid.size(); ++k) {
        if (!(tau_grid[k] > tau_grid[k - 1])) throw ConfigError("tau grid must be strictly increasing");
    }
}

bool conserves_total_number(const FockSpace& space, const SparseOperator& h) {
    const auto& m = h.matrix();
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        const int nr = space.total_number(static_cast<std::size_t>(r));
        for (SparseMatrixC::InnerIterator it(m, r); it; ++it) {
            if (it.value() != cplx{} && space.total_number(static_cast<std::size_t>(it.col())) != nr) return false;
        }
    }
    return true;
}

UnitaryResult evolve_unitary(const SparseOperator& h, const PureState& psi0, const std::vector<double>& tau_grid,
                             OdeTolerances tol) {
    validate_grid(tau_grid);
    const auto& space = *psi0.space;
    if (h.dim() != space.dimension()) throw ConfigError("evolve_unitary: operator/state dimension mismatch");
    if (h.max_asymmetry() > 1e-12 * std::max(1.0, h.max_abs())) throw ConfigError("evolve_unitary: H is not Hermitian");
    const double norm0 = psi0.norm();
    if (std::abs(norm0 - 1.0) > 1e-8) throw ConfigError("evolve_unitary: initial state is not normalized");

    UnitaryResult result;
    result.tau_grid = tau_grid;
    result.info.rtol = tol.rtol;
    result.info.atol = tol.atol;
    result.states.assign(tau_grid.size(), PureState{psi0.space, VectorC::Zero(psi0.amplitudes.size()), psi0.truncation_loss});

    std::vector<VectorC> block_out;
    if (conserves_total_number(space, h)) {
        result.info.sector_blocked = true;
        for (int n = 0; n <= space.max_total(); ++n) {
            const auto [begin, end] = space.sector(n);
            const auto len = static_cast<Eigen::Index>(end - begin);
            const VectorC block0 = psi0.amplitudes.segment(static_cast<Eigen::Index>(begin), len);
            if (block0.squaredNorm() == 0.0) continue;
            result.info.ode += integrate_block(sector_block(h, begin, end), block0, tau_grid, tol, block_out,
                                                  result.info.max_norm_correction);
            for (std::size_t k = 0; k < tau_grid.size(); ++k) {
                result.states[k].amplitudes.segment(static_cast<Eigen::Index>(begin), len) = block_out[k];
            }
        }
    } else {
        result.info.ode =
            integrate_block(h, psi0.amplitudes, tau_grid, tol, block_out, result.info.max_norm_correction);
        for (std::size_t k = 0; k < tau_grid.size(); ++k) result.states[k].amplitudes = std::move(block_out[k]);
    }
    for (const auto& s : result.states) {
        result.info.max_norm_drift = std::max(result.info.max_norm_drift, std::abs(s.norm() - 1.0));
    }
    return result;
}

LindbladResult evolve_lindblad_dense(const SparseOperator& h, const std::vector<SparseOperator>& collapse,
                                     const DensityMatrix& rho0, const std::vector<double>& tau_grid,
                                     OdeTolerances tol, std::size_t dense_limit) {
    validate_grid(tau_grid);
    const std::size_t d = h.dim();
    if (d > dense_limit) {
        throw ConfigError("evolve_lindblad_dense: dimension " + std::to_string(d) + " exceeds dense limit " +
                          std::to_string(dense_limit) + "; use evolve_trajectories");
    }
    if (rho0.dim() != d || !rho0.space) throw ConfigError("evolve_lindblad_dense: rho0 must be a full-system matrix of matching dimension");
    validate_density(rho0.matrix);

    const auto n = static_cast<Eigen::Index>(d);
    MatrixC h_eff = h.to_dense();
    std::vector<MatrixC> cs;
    for (const auto& c : collapse) {
        if (c.dim() != d) throw ConfigError("evolve_lindblad_dense: collapse operator dimension mismatch");
        cs.push_back(c.to_dense());
        h_eff -= 0.5 * kI * (cs.back().adjoint() * cs.back());
    }
    const MatrixC h_eff_adj = h_eff.adjoint();
    std::vector<MatrixC> cs_adj;
    for (const auto& c : cs) cs_adj.push_back(c.adjoint());

    MatrixC tmp(n, n);
    Dopri5 solver(
        [&](double, const VectorC& y, VectorC& dy) {
            Eigen::Map<const MatrixC> rho(y.data(), n, n);
            Eigen::Map<MatrixC> drho(dy.data(), n, n);
            drho.noalias() = -kI * (h_eff * rho);
            drho.noalias() += kI * (rho * h_eff_adj);
            for (std::size_t j = 0; j < cs.size(); ++j) {
                tmp.noalias() = cs[j] * rho;
                drho.noalias() += tmp * cs_adj[j];
            }
        },
        tol);

    const VectorC y0 = Eigen::Map<const VectorC>(rho0.matrix.data(), n * n);
    solver.reset(0.0, y0);

    LindbladResult result;
    result.tau_grid = tau_grid;
    result.info.rtol = tol.rtol;
    result.info.atol = tol.atol;
    result.states.reserve(tau_grid.size());
    result.states.push_back(rho0);
    for (std::size_t k = 1; k < tau_grid.size(); ++k) {
        solver.advance_to(tau_grid[k]);
        DensityMatrix rho = rho0;
        rho.matrix = Eigen::Map<const MatrixC>(solver.state().data(), n, n);
        result.info.max_norm_drift = std::max(result.info.max_norm_drift, std::abs(rho.trace() - 1.0));
        result.states.push_back(std::move(rho));
    }
    result.info.ode = solver.stats();
    return result;
}

VectorC propagate_taylor(const SparseOperator& h, const VectorC& psi, double dt) {
    const double scale = infinity_norm(h) * std::abs(dt);
    const int substeps = std::max(1, static_cast<int>(std::ceil(scale / 0.5)));
    const double sub = dt / substeps;
    VectorC state = psi, term(psi.size()), next(psi.size());
    for (int s = 0; s < substeps; ++s) {
        term = state;
        VectorC sum = state;
        for (int k = 1; k <= 80; ++k) {
            h.apply(term, next);
            term = (-kI * sub / static_cast<double>(k)) * next;
            sum += term;
            if (term.norm() <= 1e-18 * sum.norm()) break;
        }
        state = std::move(sum);
    }
    return state;
}

VectorC apply_number_phase(const FockSpace& space, const VectorC& amplitudes, double g, double tau) {
    if (static_cast<std::size_t>(amplitudes.size()) != space.dimension()) {
        throw ConfigError("apply_number_phase: dimension mismatch");
    }
    VectorC out = amplitudes;
    for (int n = 0; n <= space.max_total(); ++n) {
        const auto [begin, end] = space.sector(n);
        const cplx phase = std::exp(-kI * (0.5 * g * n * (n - 1.0) * tau));
        out.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) *= phase;
    }
    return out;
}

PureState apply_number_phase(const PureState& psi, double g, double tau) {
    PureState out = psi;
    out.amplitudes = apply_number_phase(*psi.space, psi.amplitudes, g, tau);
    return out;
}

double ehrenfest_residual(const SparseOperator& h, const PureState& psi, const CouplingSet& c, std::size_t mode,
                          double dtau) {
    const auto& space = *psi.space;
    if (space.mode_count() != 3) throw ConfigError("ehrenfest_residual: requires a three-mode space");
    if (mode >= 3) throw ConfigError("ehrenfest_residual: mode must be 0, 1 or 2");
    if (!(dtau > 0)) throw ConfigError("ehrenfest_residual: dtau must be > 0");

    const auto a = annihilation_op(space, mode);
    const VectorC plus = propagate_taylor(h, psi.amplitudes, dtau);
    const VectorC minus = propagate_taylor(h, psi.amplitudes, -dtau);
    const cplx lhs = (a.expectation(plus) - a.expectation(minus)) / (2.0 * dtau);

    const auto& v = psi.amplitudes;
    const auto omega = build_omega_op(space, c, mode);
    const cplx shift = v.dot(omega * (a * v));
    cplx fwm;
    if (mode == 2) {
        const VectorC t = creation_op(space, 2) * v;
        fwm = 2.0 * c.g * v.dot(annihilation_op(space, 0) * (annihilation_op(space, 1) * t));
    } else {
        const std::size_t partner = mode == 0 ? 1 : 0;
        const auto a3 = annihilation_op(space, 2);
        const VectorC t = a3 * (a3 * v);
        fwm = c.g * v.dot(creation_op(space, partner) * t);
    }
    const cplx rhs = -kI * (fwm + shift);
    return std::abs(lhs - rhs);
}

double find_extremal_time(const std::vector<double>& tau, const std::vector<double>& values, ExtremumKind kind) {
    if (tau.size() != values.size()) throw ConfigError("find_extremal_time: size mismatch");
    if (tau.size() < 3) throw ConfigError("find_extremal_time: need at least 3 samples");
    const double step = tau[1] - tau[0];
    for (std::size_t k = 2; k < tau.size(); ++k) {
        if (std::abs((tau[k] - tau[k - 1]) - step) > 1e-6 * std::abs(step)) {
            throw ConfigError("find_extremal_time: grid is not uniform");
        }
    }
    const double sign = kind == ExtremumKind::first_max ? 1.0 : -1.0;
    for (std::size_t k = 1; k + 1 < values.size(); ++k) {
        const double prev = sign * values[k - 1], cur = sign * values[k], next = sign * values[k + 1];
        if (cur >= prev && cur > next) {
            const double curvature = prev - 2 * cur + next;
            double offset = 0.0;
            if (curvature < 0) offset = 0.5 * (prev - next) / curvature;
            return tau[k] + std::clamp(offset, -0.5, 0.5) * step;
        }
    }
    throw NumericalError("find_extremal_time: no interior extremum found");
}

}  // namespace fwmcat

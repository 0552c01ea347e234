#pragma once

#include <array>

#include "fwmcat/fock_space.hpp"
#include "fwmcat/sparse_operator.hpp"

namespace fwmcat {

/// Nonlinear couplings and per-mode damping rates of the three-mode model.
struct CouplingSet {
    double g = 1.0;                          // four-wave mixing
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;     // self-phase modulation
    double g12 = 0.0, g13 = 0.0, g23 = 0.0;  // cross-phase modulation
    double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0;

    /// g_j = g/2, g_ij = g: the couplings for which SPM and XPM decouple exactly.
    static CouplingSet decoupled(double g, double gamma = 0.0);

    std::array<double, 3> spm() const { return {g1, g2, g3}; }
    std::array<double, 3> gammas() const { return {gamma1, gamma2, gamma3}; }
    bool dissipative() const { return gamma1 > 0 || gamma2 > 0 || gamma3 > 0; }

    /// Throws ConfigError unless g >= 0 and every gamma_j >= 0.
    void validate() const;
};

/// Frequency-shift matrix M with 2 g_i on the diagonal and g_ij off it.
std::array<std::array<double, 3>, 3> frequency_shift_matrix(const CouplingSet& c);

enum class Decoupling { exact, relations_only, none };
const char* to_string(Decoupling d);

/// Classifies couplings against the SPM/XPM decoupling conditions (1e-12 relative).
Decoupling validate_decoupling(const CouplingSet& c);

SparseOperator annihilation_op(const FockSpace& space, std::size_t mode);
SparseOperator creation_op(const FockSpace& space, std::size_t mode);
SparseOperator number_op(const FockSpace& space, std::size_t mode);
SparseOperator total_number_op(const FockSpace& space);

/// g (a1 a2 a3^dag^2 + h.c.)
SparseOperator build_h_fwm(const FockSpace& space, double g);
/// sum_j g_j a_j^dag^2 a_j^2
SparseOperator build_h_spm(const FockSpace& space, double g1, double g2, double g3);
/// sum_{i<j} g_ij n_i n_j
SparseOperator build_h_xpm(const FockSpace& space, double g12, double g13, double g23);
/// FWM + SPM + XPM
SparseOperator build_h_int1(const FockSpace& space, const CouplingSet& c);
/// Decoupled four-wave mixing Hamiltonian in the phase-rotated ladder basis.
SparseOperator build_h_int2(const FockSpace& space, double g);
/// Omega_i = sum_j M_ij n_j (i is 0-based).
SparseOperator build_omega_op(const FockSpace& space, const CouplingSet& c, std::size_t i);

/// sqrt(gamma_j) a_j for every mode with gamma_j > 0.
std::vector<SparseOperator> collapse_ops(const FockSpace& space, const CouplingSet& c);

}  // namespace fwmcat

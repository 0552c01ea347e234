#pragma once

#include <vector>

#include "fwmcat/hamiltonians.hpp"
#include "fwmcat/ode.hpp"
#include "fwmcat/states.hpp"

namespace fwmcat {

struct SolverInfo {
    OdeStats ode;
    double max_norm_drift = 0.0;   // |‖psi‖ - 1| or |Tr rho - 1| over the grid
    /// Largest relative norm correction applied by the unitary projection step.
    double max_norm_correction = 0.0;
    double rtol = 0.0;
    double atol = 0.0;
    bool sector_blocked = false;
    /// Trajectories integrated in the frame rotating with the real diagonal of H.
    bool interaction_picture = false;
};

struct UnitaryResult {
    std::vector<double> tau_grid;
    std::vector<PureState> states;
    SolverInfo info;
};

struct LindbladResult {
    std::vector<double> tau_grid;
    std::vector<DensityMatrix> states;
    SolverInfo info;
};

inline constexpr std::size_t kDenseLimit = 512;

/// Uniform grid 0, step, 2 step, ... up to and including tau_max (within 1e-9 step).
std::vector<double> uniform_grid(double tau_max, double step);

/// Throws ConfigError unless the grid starts at 0 and is strictly increasing.
void validate_grid(const std::vector<double>& tau_grid);

/// True when every nonzero of H connects basis states of equal total photon number.
bool conserves_total_number(const FockSpace& space, const SparseOperator& h);

/**
 * Integrates i d/dtau psi = H psi with adaptive Dormand-Prince steps and
 * reports psi at every grid time. When H conserves the total photon number
 * each sector is integrated independently. At every grid time each block is
 * projected back onto its initial norm, an exact invariant that the explicit
 * scheme otherwise lets decay at O(rtol).
 */
UnitaryResult evolve_unitary(const SparseOperator& h, const PureState& psi0, const std::vector<double>& tau_grid,
                             OdeTolerances tol = {});

/// Dense Lindblad master equation; dimension must not exceed `dense_limit`.
LindbladResult evolve_lindblad_dense(const SparseOperator& h, const std::vector<SparseOperator>& collapse,
                                     const DensityMatrix& rho0, const std::vector<double>& tau_grid,
                                     OdeTolerances tol = {}, std::size_t dense_limit = kDenseLimit);

/// Reference propagator exp(-i H dt) psi by a truncated Taylor series with substeps.
VectorC propagate_taylor(const SparseOperator& h, const VectorC& psi, double dt);

/// Multiplies the amplitude of every tuple with total number N by exp(-i (g/2) N (N-1) tau).
PureState apply_number_phase(const PureState& psi, double g, double tau);
VectorC apply_number_phase(const FockSpace& space, const VectorC& amplitudes, double g, double tau);

/**
 * |central difference of <a_mode> - <Heisenberg right-hand side>| for the
 * Hamiltonian H. The right-hand side is assembled from ladder operators,
 * the couplings' frequency-shift operators and g; `h` must be the matching
 * Hamiltonian. `mode` is 0-based.
 */
double ehrenfest_residual(const SparseOperator& h, const PureState& psi, const CouplingSet& couplings,
                          std::size_t mode, double dtau);

enum class ExtremumKind { first_max, first_min };

/// First interior extremum of a uniformly sampled series, refined by a parabola through the bracketing triple.
double find_extremal_time(const std::vector<double>& tau, const std::vector<double>& values, ExtremumKind kind);

}  // namespace fwmcat

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "fwmcat/dynamics.hpp"
#include "fwmcat/observables.hpp"

namespace fwmcat {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/**
 * Counter-based uniform generator: the n-th draw is a pure function of
 * (key, n). Trajectory k uses key = mix(master_seed, k), so a trajectory's
 * random stream does not depend on which worker runs it.
 */
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream);
    /// Uniform on the open interval (0, 1).
    double uniform();
    std::uint64_t next_u64();
    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct JumpRecord {
    double tau;
    std::size_t channel;
};

/**
 * Streaming reduction over trajectories. Trajectories are processed in
 * fixed-size chunks by index; each chunk fills its own accumulator in
 * trajectory order and chunk accumulators are merged in chunk order, so the
 * result is bit-identical for any worker count.
 */
class EnsembleAccumulator {
public:
    virtual ~EnsembleAccumulator() = default;
    virtual void add(std::size_t trajectory, std::size_t grid_index, const VectorC& state) = 0;
    virtual void merge(const EnsembleAccumulator& other) = 0;
};

using AccumulatorFactory = std::function<std::unique_ptr<EnsembleAccumulator>()>;

/// Sums reduced density matrices and single-mode moments at every grid time.
class ReducedStateAccumulator : public EnsembleAccumulator {
public:
    ReducedStateAccumulator(const FockSpace& space, std::vector<std::vector<std::size_t>> subsets,
                            std::vector<std::size_t> moment_modes, std::size_t grid_size);

    void add(std::size_t trajectory, std::size_t grid_index, const VectorC& state) override;
    void merge(const EnsembleAccumulator& other) override;

    /// Ensemble-averaged reduced matrix of subset `s` at a grid index.
    MatrixC mean_reduced(std::size_t s, std::size_t grid_index) const;
    ModeMoments mean_moments(std::size_t mode_slot, std::size_t grid_index) const;
    std::size_t count(std::size_t grid_index) const { return counts_[grid_index]; }

private:
    std::vector<std::shared_ptr<const PartialTracer>> tracers_;
    std::vector<std::shared_ptr<const ModeMomentEvaluator>> evaluators_;
    std::vector<std::vector<MatrixC>> sums_;          // [subset][grid]
    std::vector<std::vector<ModeMoments>> moments_;   // [mode slot][grid]
    std::vector<std::size_t> counts_;
};

/// Called on the normalized state of each trajectory at each grid time; results are stored per (trajectory, grid index).
using TrajectoryProbe = std::function<std::vector<cplx>(std::size_t grid_index, const VectorC& state)>;

struct TrajectoryOptions {
    OdeTolerances tol{};
    /// Grid indices whose full normalized states are stored; empty = none.
    std::vector<std::size_t> snapshot_indices;
    TrajectoryProbe probe;
    /// 0 = std::thread::hardware_concurrency()
    unsigned workers = 0;
    double jump_norm_tol = 1e-6;
    AccumulatorFactory make_accumulator;
    std::size_t chunk_size = 16;
    /// Integrate in the frame rotating with Re diag(H) when that diagonal is
    /// constant on every pair coupled by the off-diagonal part (then the
    /// rotating-frame generator is time independent and the change is exact).
    bool interaction_picture = true;
};

struct TrajectoryEnsemble {
    FockSpacePtr space;
    std::uint64_t master_seed = 0;
    std::size_t n_traj = 0;
    std::vector<double> tau_grid;
    std::vector<std::size_t> snapshot_indices;
    std::vector<std::vector<VectorC>> snapshots;                  // [trajectory][snapshot]
    std::vector<std::vector<std::vector<cplx>>> probe_values;     // [trajectory][grid index]
    std::vector<std::vector<JumpRecord>> jumps;                   // [trajectory]
    std::shared_ptr<EnsembleAccumulator> accumulated;             // null without a factory
    SolverInfo info;

    /// (1/n) sum_k |psi_k><psi_k| at a stored snapshot, summed in trajectory order.
    DensityMatrix average_density(std::size_t snapshot) const;
    DensityMatrix average_reduced(std::size_t snapshot, const std::vector<std::size_t>& keep) const;
    std::size_t total_jumps() const;
};

/**
 * Monte Carlo wave-function unravelling of the Lindblad equation with
 * H_eff = H - (i/2) sum_j C_j^dag C_j: integrate until ‖psi‖^2 falls to a
 * uniform draw r, bisect the crossing on the dense output, jump through
 * channel j with probability proportional to ‖C_j psi‖^2, renormalize and
 * redraw r.
 */
TrajectoryEnsemble evolve_trajectories(const SparseOperator& h, const std::vector<SparseOperator>& collapse,
                                       const PureState& psi0, const std::vector<double>& tau_grid,
                                       std::size_t n_traj, std::uint64_t master_seed,
                                       const TrajectoryOptions& options = {});

}  // namespace fwmcat

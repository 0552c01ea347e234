#include "fwmcat/trajectories.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "fwmcat/errors.hpp"

namespace fwmcat {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t master_seed, std::uint64_t stream)
    : key_(mix64(master_seed ^ mix64(stream ^ 0xD1B54A32D192ED03ULL))) {}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

namespace {

const cplx kI{0.0, 1.0};

struct TrajectoryOutput {
    std::vector<VectorC> snapshots;
    std::vector<std::vector<cplx>> probes;
    std::vector<JumpRecord> jumps;
    OdeStats stats;
};

class TrajectoryRunner {
public:
    TrajectoryRunner(const SparseOperator& h_eff, const std::vector<SparseOperator>& collapse,
                     const std::vector<double>& grid, const TrajectoryOptions& options,
                     const Eigen::VectorXd& rotation)
        : h_eff_(h_eff), collapse_(collapse), grid_(grid), options_(options), rotation_(rotation),
          solver_(
              [this](double, const VectorC& y, VectorC& dy) {
                  h_eff_.apply(y, dy);
                  dy *= -kI;
              },
              options.tol) {
        for (auto idx : options_.snapshot_indices) {
            if (idx >= grid_.size()) throw ConfigError("evolve_trajectories: snapshot index out of range");
        }
    }

    TrajectoryOutput run(const VectorC& psi0, std::uint64_t seed, std::size_t index, EnsembleAccumulator* acc) {
        acc_ = acc;
        index_ = index;
        TrajectoryOutput out;
        out.snapshots.resize(options_.snapshot_indices.size());
        if (options_.probe) out.probes.resize(grid_.size());
        CounterRng rng(seed, index);
        double threshold = rng.uniform();

        record(out, 0, psi0);
        const OdeStats start = solver_.stats();
        VectorC trial(psi0.size()), jumped(psi0.size()), lab(psi0.size());
        to_frame(grid_.front(), psi0, trial, +1.0);
        solver_.reset(grid_.front(), trial);
        std::size_t next_grid = 1;

        while (next_grid < grid_.size()) {
            const double norm_before = solver_.state().squaredNorm();
            solver_.step(grid_[next_grid]);
            const double norm_after = solver_.state().squaredNorm();
            if (norm_after > norm_before * (1.0 + 10 * options_.tol.rtol) + options_.tol.atol) {
                std::ostringstream msg;
                msg << "evolve_trajectories: norm increased from " << norm_before << " to " << norm_after
                    << " at tau=" << solver_.time() << " in trajectory " << index;
                throw NumericalError(msg.str());
            }

            if (norm_after > threshold) {
                if (solver_.time() >= grid_[next_grid]) {
                    to_frame(solver_.time(), solver_.state(), lab, -1.0);
                    record(out, next_grid, lab);
                    ++next_grid;
                }
                continue;
            }

            // Bisect the crossing ‖psi(t)‖^2 = threshold inside the last step.
            double lo = solver_.previous_time(), hi = solver_.time();
            double t_jump = hi;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                solver_.interpolate(mid, trial);
                const double n2 = trial.squaredNorm();
                t_jump = mid;
                if (std::abs(n2 - threshold) <= options_.jump_norm_tol * threshold) break;
                if (n2 > threshold) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (it == 99) {
                    throw NumericalError("evolve_trajectories: jump-time bisection did not converge in trajectory " +
                                         std::to_string(index));
                }
            }
            solver_.interpolate(t_jump, lab);
            to_frame(t_jump, lab, trial, -1.0);

            double total = 0.0;
            std::vector<double> weights(collapse_.size());
            for (std::size_t j = 0; j < collapse_.size(); ++j) {
                weights[j] = (collapse_[j] * trial).squaredNorm();
                total += weights[j];
            }
            if (!(total > 0)) {
                throw NumericalError("evolve_trajectories: norm decayed with all jump rates zero in trajectory " +
                                     std::to_string(index));
            }
            const double pick = rng.uniform() * total;
            std::size_t channel = 0;
            double acc = weights[0];
            while (channel + 1 < collapse_.size() && acc < pick) acc += weights[++channel];

            collapse_[channel].apply(trial, jumped);
            jumped /= jumped.norm();
            out.jumps.push_back({t_jump, channel});
            threshold = rng.uniform();

            to_frame(t_jump, jumped, lab, +1.0);
            solver_.reset(t_jump, lab);
            if (t_jump >= grid_[next_grid]) {
                // crossing located at a grid time: the post-jump state is reported
                record(out, next_grid, jumped);
                ++next_grid;
            }
        }
        out.stats = solver_.stats();
        out.stats.accepted -= start.accepted;
        out.stats.rejected -= start.rejected;
        out.stats.rhs_evals -= start.rhs_evals;
        return out;
    }

private:
    /// out = exp(sign * i R t) in; the identity without a rotating frame.
    void to_frame(double t, const VectorC& in, VectorC& out, double sign) const {
        if (rotation_.size() == 0) {
            out = in;
            return;
        }
        for (Eigen::Index i = 0; i < in.size(); ++i) out[i] = in[i] * std::polar(1.0, sign * rotation_[i] * t);
    }

    void record(TrajectoryOutput& out, std::size_t grid_index, const VectorC& state) {
        const VectorC normalized = state / state.norm();
        for (std::size_t s = 0; s < options_.snapshot_indices.size(); ++s) {
            if (options_.snapshot_indices[s] == grid_index) out.snapshots[s] = normalized;
        }
        if (options_.probe) out.probes[grid_index] = options_.probe(grid_index, normalized);
        if (acc_) acc_->add(index_, grid_index, normalized);
    }

    EnsembleAccumulator* acc_ = nullptr;
    std::size_t index_ = 0;

    const SparseOperator& h_eff_;
    const std::vector<SparseOperator>& collapse_;
    const std::vector<double>& grid_;
    const TrajectoryOptions& options_;
    const Eigen::VectorXd& rotation_;
    Dopri5 solver_;
};

}  // namespace

TrajectoryEnsemble evolve_trajectories(const SparseOperator& h, const std::vector<SparseOperator>& collapse,
                                       const PureState& psi0, const std::vector<double>& tau_grid,
                                       std::size_t n_traj, std::uint64_t master_seed,
                                       const TrajectoryOptions& options) {
    validate_grid(tau_grid);
    if (collapse.empty()) throw ConfigError("evolve_trajectories: no collapse operators; use evolve_unitary");
    if (n_traj == 0) throw ConfigError("evolve_trajectories: n_traj must be >= 1");
    if (h.dim() != psi0.space->dimension()) throw ConfigError("evolve_trajectories: dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw ConfigError("evolve_trajectories: initial state is not normalized");

    SparseOperator decay;
    for (const auto& c : collapse) {
        if (c.dim() != h.dim()) throw ConfigError("evolve_trajectories: collapse operator dimension mismatch");
        auto term = c.adjoint() * c;
        decay = decay.dim() == 0 ? term : decay + term;
    }
    const SparseOperator h_eff = h - cplx(0.0, 0.5) * decay;

    // Rotating frame: psi = exp(-i R tau) phi with R = Re diag(H_eff) turns the
    // generator into H_eff - R when R is constant on every coupled pair.
    Eigen::VectorXd rotation;
    SparseOperator generator = h_eff;
    if (options.interaction_picture) {
        const auto& m = h_eff.matrix();
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(m.rows());
        for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
            for (SparseMatrixC::InnerIterator it(m, r); it; ++it) {
                if (it.col() == r) diag[r] = it.value().real();
            }
        }
        const double scale = std::max(1.0, diag.cwiseAbs().maxCoeff());
        bool constant = diag.cwiseAbs().maxCoeff() > 0;
        for (Eigen::Index r = 0; r < m.outerSize() && constant; ++r) {
            for (SparseMatrixC::InnerIterator it(m, r); it; ++it) {
                if (std::abs(diag[r] - diag[it.col()]) > 1e-12 * scale) {
                    constant = false;
                    break;
                }
            }
        }
        if (constant) {
            rotation = diag;
            SparseMatrixC g = h_eff.matrix() - SparseOperator::diagonal(diag).matrix();
            g.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return v != cplx{}; });
            generator = SparseOperator(std::move(g), false);
        }
    }

    TrajectoryEnsemble ens;
    ens.space = psi0.space;
    ens.master_seed = master_seed;
    ens.n_traj = n_traj;
    ens.tau_grid = tau_grid;
    ens.snapshot_indices = options.snapshot_indices;
    ens.snapshots.resize(n_traj);
    ens.probe_values.resize(n_traj);
    ens.jumps.resize(n_traj);
    ens.info.rtol = options.tol.rtol;
    ens.info.atol = options.tol.atol;
    ens.info.interaction_picture = rotation.size() > 0;

    std::vector<OdeStats> stats(n_traj);
    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());

    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
    const std::size_t n_chunks = (n_traj + chunk - 1) / chunk;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));

    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::size_t error_index = n_traj;
    std::exception_ptr error;
    std::vector<std::unique_ptr<EnsembleAccumulator>> pending(n_chunks);
    std::size_t merge_cursor = 0;

    auto worker = [&]() {
        try {
            TrajectoryRunner runner(generator, collapse, tau_grid, options, rotation);
            for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
                auto acc = options.make_accumulator ? options.make_accumulator() : nullptr;
                const std::size_t end = std::min(n_traj, (c + 1) * chunk);
                for (std::size_t k = c * chunk; k < end; ++k) {
                    try {
                        auto out = runner.run(psi0.amplitudes, master_seed, k, acc.get());
                        ens.snapshots[k] = std::move(out.snapshots);
                        ens.probe_values[k] = std::move(out.probes);
                        ens.jumps[k] = std::move(out.jumps);
                        stats[k] = out.stats;
                    } catch (...) {
                        std::lock_guard lock(mutex);
                        if (k < error_index) {
                            error_index = k;
                            error = std::current_exception();
                        }
                        return;
                    }
                }
                if (!acc) continue;
                std::lock_guard lock(mutex);
                pending[c] = std::move(acc);
                while (merge_cursor < n_chunks && pending[merge_cursor]) {
                    if (!ens.accumulated) {
                        ens.accumulated = std::move(pending[merge_cursor]);
                    } else {
                        ens.accumulated->merge(*pending[merge_cursor]);
                        pending[merge_cursor].reset();
                    }
                    ++merge_cursor;
                }
            }
        } catch (...) {
            std::lock_guard lock(mutex);
            if (!error) error = std::current_exception();
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    for (const auto& s : stats) ens.info.ode += s;
    for (const auto& traj : ens.snapshots) {
        for (const auto& v : traj) ens.info.max_norm_drift = std::max(ens.info.max_norm_drift, std::abs(v.norm() - 1.0));
    }
    return ens;
}

DensityMatrix TrajectoryEnsemble::average_density(std::size_t snapshot) const {
    if (snapshot >= snapshot_indices.size()) throw ConfigError("average_density: snapshot index out of range");
    const auto d = static_cast<Eigen::Index>(space->dimension());
    DensityMatrix rho;
    rho.matrix = MatrixC::Zero(d, d);
    for (const auto& traj : snapshots) rho.matrix.noalias() += traj[snapshot] * traj[snapshot].adjoint();
    rho.matrix /= static_cast<double>(n_traj);
    rho.space = space;
    rho.modes.resize(space->mode_count());
    for (std::size_t j = 0; j < rho.modes.size(); ++j) rho.modes[j] = j;
    rho.label = "ensemble";
    return rho;
}

DensityMatrix TrajectoryEnsemble::average_reduced(std::size_t snapshot, const std::vector<std::size_t>& keep) const {
    if (snapshot >= snapshot_indices.size()) throw ConfigError("average_reduced: snapshot index out of range");
    DensityMatrix rho;
    for (const auto& traj : snapshots) {
        MatrixC r = reduced_matrix(*space, traj[snapshot], keep);
        if (rho.matrix.size() == 0) {
            rho.matrix = std::move(r);
        } else {
            rho.matrix += r;
        }
    }
    rho.matrix /= static_cast<double>(n_traj);
    rho.modes = keep;
    std::sort(rho.modes.begin(), rho.modes.end());
    for (auto k : rho.modes) rho.local_dims.push_back(space->local_dim(k));
    rho.label = "ensemble-reduced";
    return rho;
}

ReducedStateAccumulator::ReducedStateAccumulator(const FockSpace& space,
                                                 std::vector<std::vector<std::size_t>> subsets,
                                                 std::vector<std::size_t> moment_modes, std::size_t grid_size)
    : counts_(grid_size, 0) {
    for (auto& keep : subsets) {
        tracers_.push_back(std::make_shared<const PartialTracer>(space, std::move(keep)));
        const auto d = static_cast<Eigen::Index>(tracers_.back()->kept_dim());
        sums_.emplace_back(grid_size, MatrixC::Zero(d, d));
    }
    for (auto mode : moment_modes) {
        evaluators_.push_back(std::make_shared<const ModeMomentEvaluator>(space, mode));
        moments_.emplace_back(grid_size);
    }
}

void ReducedStateAccumulator::add(std::size_t, std::size_t grid_index, const VectorC& state) {
    for (std::size_t s = 0; s < tracers_.size(); ++s) tracers_[s]->accumulate(state, sums_[s][grid_index]);
    for (std::size_t m = 0; m < evaluators_.size(); ++m) moments_[m][grid_index] += (*evaluators_[m])(state);
    ++counts_[grid_index];
}

void ReducedStateAccumulator::merge(const EnsembleAccumulator& other) {
    const auto& o = dynamic_cast<const ReducedStateAccumulator&>(other);
    for (std::size_t s = 0; s < sums_.size(); ++s) {
        for (std::size_t g = 0; g < counts_.size(); ++g) sums_[s][g] += o.sums_[s][g];
    }
    for (std::size_t m = 0; m < moments_.size(); ++m) {
        for (std::size_t g = 0; g < counts_.size(); ++g) moments_[m][g] += o.moments_[m][g];
    }
    for (std::size_t g = 0; g < counts_.size(); ++g) counts_[g] += o.counts_[g];
}

MatrixC ReducedStateAccumulator::mean_reduced(std::size_t s, std::size_t grid_index) const {
    return sums_.at(s).at(grid_index) / static_cast<double>(std::max<std::size_t>(1, counts_[grid_index]));
}

ModeMoments ReducedStateAccumulator::mean_moments(std::size_t mode_slot, std::size_t grid_index) const {
    ModeMoments m = moments_.at(mode_slot).at(grid_index);
    m *= 1.0 / static_cast<double>(std::max<std::size_t>(1, counts_[grid_index]));
    return m;
}

std::size_t TrajectoryEnsemble::total_jumps() const {
    std::size_t n = 0;
    for (const auto& j : jumps) n += j.size();
    return n;
}

}  // namespace fwmcat

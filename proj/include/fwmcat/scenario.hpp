#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwmcat/dynamics.hpp"
#include "fwmcat/observables.hpp"
#include "fwmcat/wigner.hpp"

namespace fwmcat {

enum class HamiltonianKind { int1, int2 };
enum class SolverMethod { automatic, dense, trajectories };

/**
 * Scenario configuration (JSON). Top-level keys:
 *   hamiltonian  "int1" | "int2"
 *   couplings    {g, g1, g2, g3, g12, g13, g23, gamma1, gamma2, gamma3}
 *   alpha1, alpha2  {abs2, phase}
 *   truncation   {max_occ: [n1, n2, n3], total_cap: N | null}
 *   tau_max, tau_step
 *   solver       {method: "auto" | "dense" | "trajectories", n_traj, master_seed, rtol, atol, workers}
 *   outputs      {directory, artifacts: [...], report_tau: t | null, wigner_grid: "xmin,xmax,nx,pmin,pmax,np",
 *                 reference: run directory | null}
 * Unknown keys are rejected.
 */
struct ScenarioConfig {
    HamiltonianKind hamiltonian = HamiltonianKind::int1;
    CouplingSet couplings;
    cplx alpha1{}, alpha2{};
    std::vector<int> max_occ;
    std::optional<int> total_cap;
    double tau_max = 0.0, tau_step = 0.0;

    SolverMethod method = SolverMethod::automatic;
    std::size_t n_traj = 1000;
    std::uint64_t master_seed = 1;
    double rtol = 1e-8, atol = 1e-10;
    unsigned workers = 0;

    std::string directory;
    std::vector<std::string> artifacts{"timeseries", "distributions", "wigner", "marginals", "states"};
    std::optional<double> report_tau;
    GridSpec wigner_grid;
    std::string reference;

    static ScenarioConfig parse(const std::string& json_text);
    static ScenarioConfig load(const std::filesystem::path& path);
    /// Throws ConfigError on violated invariants.
    void validate() const;
    /// Canonical JSON of every field except outputs.directory.
    std::string canonical() const;
    std::string hash() const;
    bool wants(const std::string& artifact) const;
};

const char* to_string(HamiltonianKind k);
const char* to_string(SolverMethod m);

struct ModeReport {
    double n = 0;
    QuadratureVariances quad;
    std::optional<double> fano;
    std::optional<double> n_stderr, fano_stderr;   // trajectory ensembles only
    double odd_probability = 0;
    std::vector<double> distribution;
};

struct ExtremumRecord {
    std::optional<double> tau_n3_max;   // empty when the series has no interior extremum
    std::optional<double> tau_n1_min;
    double grid_step = 0;
    bool agree = false;   // both found, within one grid step
};

struct WignerSummary {
    std::size_t mode = 0;        // 1-based
    std::string picture;         // "raw" | "transformed"
    double min = 0;
    double negativity_volume = 0;
    double normalization = 0;
};

struct SummaryReport {
    std::string config_hash;
    std::string hamiltonian;
    std::string solver;
    std::string decoupling;
    std::size_t dimension = 0;
    ExtremumRecord extremum;
    double tau_report = 0;
    std::array<ModeReport, 3> modes;
    std::optional<double> schmidt_number;   // pure global states only
    double purity3 = 0;
    /// max |x(tau) - x(0)| over the grid; empty for dissipative runs
    std::optional<std::array<double, 3>> conservation_drift;   // N, n1 - n2, 2 n1 + n3
    SolverInfo info;
    double truncation_loss = 0;
    std::size_t n_traj = 0;
    std::uint64_t master_seed = 0;
    std::size_t total_jumps = 0;
    std::vector<WignerSummary> wigner;
    /// Uhlmann fidelity per mode against outputs.reference
    std::vector<std::pair<std::string, double>> fidelities;
    std::vector<std::string> warnings;

    /// JSON text, numbers at 9 significant digits; byte-stable for identical inputs.
    std::string to_json() const;
};

struct ScenarioResult {
    SummaryReport summary;
    std::vector<double> tau;
    std::vector<std::array<ModeMoments, 3>> moments;   // per grid time
    std::vector<double> purity3;
    std::size_t report_index = 0;
    std::array<MatrixC, 3> reduced;               // single-mode matrices at the report time
    std::array<MatrixC, 3> reduced_transformed;   // after the number-phase transformation
    std::optional<PureState> report_state;        // full state at the report time (unitary runs)
};

/// Evolves the scenario and evaluates every observable; writes nothing.
ScenarioResult simulate(const ScenarioConfig& config);

/// simulate() plus every requested artifact and summary.json under `out_dir`.
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// First n3 maximum and first n1 minimum over the config's grid; NumericalError when
/// n3 has no maximum or the two disagree by more than one grid step in a non-dissipative run.
ExtremumRecord scan_extremum(const ScenarioConfig& config);
ExtremumRecord extremum_from(const std::vector<double>& tau, const std::vector<std::array<ModeMoments, 3>>& moments,
                             bool enforce_agreement);

struct ComparisonRecord {
    double tau_a = 0, tau_b = 0;
    std::array<std::optional<double>, 3> fidelity;        // (Tr sqrt(sqrt(a) b sqrt(a)))^2
    std::array<std::optional<double>, 3> root_fidelity;   // Tr sqrt(sqrt(a) b sqrt(a))
    std::array<std::optional<double>, 3> trace_distance;
    std::string to_json() const;
};

/// Mode-wise fidelities between the reduced states two runs saved at their report times.
ComparisonRecord compare_states(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

/// Zero-pads the smaller of two square matrices so both share a dimension.
std::pair<MatrixC, MatrixC> common_dimension(const MatrixC& a, const MatrixC& b);

}  // namespace fwmcat

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fwmcat/dynamics.hpp"
#include "fwmcat/errors.hpp"
#include "fwmcat/hamiltonians.hpp"
#include "fwmcat/io.hpp"
#include "fwmcat/observables.hpp"
#include "fwmcat/scenario.hpp"
#include "fwmcat/trajectories.hpp"
#include "fwmcat/wigner.hpp"

namespace py = pybind11;
using namespace fwmcat;

namespace {

using SpacePtr = std::shared_ptr<FockSpace>;

SpacePtr mutable_space(const FockSpacePtr& s) { return std::const_pointer_cast<FockSpace>(s); }

py::dict solver_info(const SolverInfo& info) {
    py::dict d;
    d["accepted_steps"] = info.ode.accepted;
    d["rejected_steps"] = info.ode.rejected;
    d["rhs_evals"] = info.ode.rhs_evals;
    d["max_norm_drift"] = info.max_norm_drift;
    d["max_norm_correction"] = info.max_norm_correction;
    d["rtol"] = info.rtol;
    d["atol"] = info.atol;
    d["sector_blocked"] = info.sector_blocked;
    d["interaction_picture"] = info.interaction_picture;
    return d;
}

py::dict moments_dict(const ModeMoments& m) {
    py::dict d;
    d["n"] = m.n;
    d["n2"] = m.n2;
    d["b_bdag"] = m.b_bdag;
    d["b"] = m.b;
    d["b2"] = m.b2;
    return d;
}

DensityMatrix full_density(const SpacePtr& space, const MatrixC& rho) {
    DensityMatrix d;
    d.matrix = rho;
    d.space = space;
    d.modes.resize(space->mode_count());
    for (std::size_t j = 0; j < d.modes.size(); ++j) d.modes[j] = j;
    return d;
}

}  // namespace

PYBIND11_MODULE(_fwmcat, m) {
    m.doc() = "Truncated three-mode Fock-space dynamics for four-wave mixing cavities";

    auto base_config = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception<UndefinedError>(m, "UndefinedError", PyExc_ArithmeticError);

    py::class_<FockSpace, SpacePtr>(m, "FockSpace")
        .def_property_readonly("dimension", &FockSpace::dimension)
        .def_property_readonly("mode_count", &FockSpace::mode_count)
        .def_property_readonly("max_occ", &FockSpace::max_occ)
        .def_property_readonly("total_cap", &FockSpace::total_cap)
        .def("occupation",
             [](const FockSpace& s, std::size_t i) {
                 if (i >= s.dimension()) throw py::index_error("basis index out of range");
                 auto o = s.occupation(i);
                 return std::vector<int>(o.begin(), o.end());
             })
        .def("index_of", [](const FockSpace& s, const std::vector<int>& occ) { return s.index_of(std::span<const int>(occ)); })
        .def("sector", &FockSpace::sector)
        .def("__len__", &FockSpace::dimension);

    m.def(
        "build_space",
        [](std::vector<int> max_occ, std::optional<int> total_cap, std::size_t limit) {
            return mutable_space(build_space(std::move(max_occ), total_cap, limit));
        },
        py::arg("max_occ"), py::arg("total_cap") = py::none(), py::arg("dimension_limit") = 5'000'000);

    py::class_<SparseOperator>(m, "SparseOperator")
        .def_property_readonly("dim", &SparseOperator::dim)
        .def_property_readonly("nonzeros", &SparseOperator::nonzeros)
        .def("to_dense", &SparseOperator::to_dense)
        .def("apply", [](const SparseOperator& op, const VectorC& v) { return VectorC(op * v); })
        .def("expectation", &SparseOperator::expectation)
        .def("max_asymmetry", &SparseOperator::max_asymmetry)
        .def("adjoint", &SparseOperator::adjoint)
        .def("triplets",
             [](const SparseOperator& op) {
                 std::vector<std::tuple<std::size_t, std::size_t, cplx>> out;
                 for (const auto& t : op.triplets()) out.emplace_back(t.row, t.col, t.value);
                 return out;
             })
        .def("__add__", [](const SparseOperator& a, const SparseOperator& b) { return a + b; })
        .def("__sub__", [](const SparseOperator& a, const SparseOperator& b) { return a - b; })
        .def("__matmul__", [](const SparseOperator& a, const SparseOperator& b) { return a * b; })
        .def("__rmul__", [](const SparseOperator& a, cplx s) { return s * a; });
    m.def("commutator", &commutator);

    py::class_<CouplingSet>(m, "CouplingSet")
        .def(py::init<>())
        .def(py::init([](double g, double g1, double g2, double g3, double g12, double g13, double g23, double gamma1,
                         double gamma2, double gamma3) {
                 return CouplingSet{g, g1, g2, g3, g12, g13, g23, gamma1, gamma2, gamma3};
             }),
             py::arg("g") = 1.0, py::arg("g1") = 0.0, py::arg("g2") = 0.0, py::arg("g3") = 0.0, py::arg("g12") = 0.0,
             py::arg("g13") = 0.0, py::arg("g23") = 0.0, py::arg("gamma1") = 0.0, py::arg("gamma2") = 0.0,
             py::arg("gamma3") = 0.0)
        .def_static("decoupled", &CouplingSet::decoupled, py::arg("g"), py::arg("gamma") = 0.0)
        .def_readwrite("g", &CouplingSet::g)
        .def_readwrite("g1", &CouplingSet::g1)
        .def_readwrite("g2", &CouplingSet::g2)
        .def_readwrite("g3", &CouplingSet::g3)
        .def_readwrite("g12", &CouplingSet::g12)
        .def_readwrite("g13", &CouplingSet::g13)
        .def_readwrite("g23", &CouplingSet::g23)
        .def_readwrite("gamma1", &CouplingSet::gamma1)
        .def_readwrite("gamma2", &CouplingSet::gamma2)
        .def_readwrite("gamma3", &CouplingSet::gamma3)
        .def("validate", &CouplingSet::validate);
    m.def("validate_decoupling", [](const CouplingSet& c) { return std::string(to_string(validate_decoupling(c))); });

    m.def("annihilation_op", &annihilation_op, py::arg("space"), py::arg("mode"));
    m.def("creation_op", &creation_op, py::arg("space"), py::arg("mode"));
    m.def("number_op", &number_op, py::arg("space"), py::arg("mode"));
    m.def("total_number_op", &total_number_op);
    m.def("build_h_fwm", &build_h_fwm, py::arg("space"), py::arg("g"));
    m.def("build_h_spm", &build_h_spm);
    m.def("build_h_xpm", &build_h_xpm);
    m.def("build_h_int1", &build_h_int1, py::arg("space"), py::arg("couplings"));
    m.def("build_h_int2", &build_h_int2, py::arg("space"), py::arg("g"));
    m.def("collapse_ops", &collapse_ops, py::arg("space"), py::arg("couplings"));

    py::class_<PureState>(m, "PureState")
        .def_property_readonly("space", [](const PureState& p) { return mutable_space(p.space); })
        .def_readwrite("amplitudes", &PureState::amplitudes)
        .def_readonly("truncation_loss", &PureState::truncation_loss)
        .def("norm", &PureState::norm);
    m.def(
        "coherent_product_state",
        [](const SpacePtr& s, const std::vector<cplx>& alphas, double max_loss) {
            return coherent_product_state(s, alphas, max_loss);
        },
        py::arg("space"), py::arg("alphas"), py::arg("max_loss") = 1e-4);
    m.def(
        "fock_state", [](const SpacePtr& s, const std::vector<int>& occ) { return fock_state(s, occ); }, py::arg("space"),
        py::arg("occupation"));
    m.def(
        "state_from_amplitudes",
        [](const SpacePtr& s, const VectorC& amps) {
            if (static_cast<std::size_t>(amps.size()) != s->dimension()) throw ConfigError("dimension mismatch");
            return PureState{s, amps, 0.0};
        },
        py::arg("space"), py::arg("amplitudes"));

    m.def("uniform_grid", &uniform_grid, py::arg("tau_max"), py::arg("step"));
    m.def(
        "evolve_unitary",
        [](const SparseOperator& h, const PureState& psi0, const std::vector<double>& grid, double rtol, double atol) {
            const auto r = evolve_unitary(h, psi0, grid, {rtol, atol});
            std::vector<VectorC> states;
            for (const auto& s : r.states) states.push_back(s.amplitudes);
            return py::make_tuple(states, solver_info(r.info));
        },
        py::arg("h"), py::arg("psi0"), py::arg("tau_grid"), py::arg("rtol") = 1e-8, py::arg("atol") = 1e-10);
    m.def(
        "evolve_lindblad_dense",
        [](const SparseOperator& h, const std::vector<SparseOperator>& collapse, const SpacePtr& space,
           const MatrixC& rho0, const std::vector<double>& grid, double rtol, double atol) {
            const auto r = evolve_lindblad_dense(h, collapse, full_density(space, rho0), grid, {rtol, atol});
            std::vector<MatrixC> states;
            for (const auto& s : r.states) states.push_back(s.matrix);
            return py::make_tuple(states, solver_info(r.info));
        },
        py::arg("h"), py::arg("collapse"), py::arg("space"), py::arg("rho0"), py::arg("tau_grid"),
        py::arg("rtol") = 1e-8, py::arg("atol") = 1e-10);
    m.def(
        "evolve_trajectories",
        [](const SparseOperator& h, const std::vector<SparseOperator>& collapse, const PureState& psi0,
           const std::vector<double>& grid, std::size_t n_traj, std::uint64_t seed, unsigned workers,
           bool interaction_picture) {
            TrajectoryOptions opt;
            opt.workers = workers;
            opt.interaction_picture = interaction_picture;
            opt.make_accumulator = [&]() -> std::unique_ptr<EnsembleAccumulator> {
                return std::make_unique<ReducedStateAccumulator>(
                    *psi0.space, std::vector<std::vector<std::size_t>>{{0}, {1}, {2}},
                    std::vector<std::size_t>{0, 1, 2}, grid.size());
            };
            std::unique_ptr<TrajectoryEnsemble> ens;
            {
                py::gil_scoped_release release;
                ens = std::make_unique<TrajectoryEnsemble>(
                    evolve_trajectories(h, collapse, psi0, grid, n_traj, seed, opt));
            }
            const auto& acc = dynamic_cast<const ReducedStateAccumulator&>(*ens->accumulated);
            py::list reduced, moms;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                py::list rk, mk;
                for (std::size_t j = 0; j < 3; ++j) {
                    rk.append(acc.mean_reduced(j, k));
                    mk.append(moments_dict(acc.mean_moments(j, k)));
                }
                reduced.append(rk);
                moms.append(mk);
            }
            py::dict out;
            out["reduced"] = reduced;
            out["moments"] = moms;
            out["total_jumps"] = ens->total_jumps();
            out["info"] = solver_info(ens->info);
            return out;
        },
        py::arg("h"), py::arg("collapse"), py::arg("psi0"), py::arg("tau_grid"), py::arg("n_traj"),
        py::arg("master_seed"), py::arg("workers") = 0, py::arg("interaction_picture") = true);
    m.def(
        "apply_number_phase", [](const PureState& psi, double g, double tau) { return apply_number_phase(psi, g, tau); },
        py::arg("psi"), py::arg("g"), py::arg("tau"));
    m.def("ehrenfest_residual", &ehrenfest_residual, py::arg("h"), py::arg("psi"), py::arg("couplings"),
          py::arg("mode"), py::arg("dtau"));
    m.def(
        "find_extremal_time",
        [](const std::vector<double>& tau, const std::vector<double>& values, const std::string& kind) {
            if (kind != "max" && kind != "min") throw ConfigError("kind must be \"max\" or \"min\"");
            return find_extremal_time(tau, values, kind == "max" ? ExtremumKind::first_max : ExtremumKind::first_min);
        },
        py::arg("tau"), py::arg("values"), py::arg("kind") = "max");

    m.def(
        "partial_trace",
        [](const PureState& psi, const std::vector<std::size_t>& keep) { return partial_trace(psi, keep).matrix; },
        py::arg("psi"), py::arg("keep"));
    m.def("purity", py::overload_cast<const MatrixC&>(&purity));
    m.def("fidelity", py::overload_cast<const MatrixC&, const MatrixC&>(&fidelity));
    m.def("trace_distance", &trace_distance);
    m.def("schmidt_number", &schmidt_number, py::arg("psi"), py::arg("keep"));
    m.def("moments", [](const MatrixC& rho) { return moments_dict(moments(rho)); });
    m.def("quadrature_variances", [](const MatrixC& rho) {
        const auto q = quadrature_variances(rho);
        return py::make_tuple(q.var_x, q.var_p);
    });
    m.def("fano", py::overload_cast<const MatrixC&>(&fano));
    m.def("photon_distribution", py::overload_cast<const MatrixC&>(&photon_distribution));

    m.def("wigner_point", &wigner_point, py::arg("rho"), py::arg("x"), py::arg("p"));
    m.def(
        "wigner",
        [](const MatrixC& rho, const std::string& grid) {
            const auto w = wigner(rho, parse_grid_spec(grid));
            return py::make_tuple(w.values, w.normalization);
        },
        py::arg("rho"), py::arg("grid") = "-8,8,201,-8,8,201");

    m.def(
        "simulate",
        [](const std::string& config_json) {
            const auto cfg = ScenarioConfig::parse(config_json);
            ScenarioResult res;
            {
                py::gil_scoped_release release;
                res = simulate(cfg);
            }
            py::dict out;
            out["summary"] = res.summary.to_json();
            out["tau"] = res.tau;
            py::list n;
            for (const auto& mk : res.moments) n.append(py::make_tuple(mk[0].n, mk[1].n, mk[2].n));
            out["n"] = n;
            out["purity3"] = res.purity3;
            out["report_index"] = res.report_index;
            out["reduced"] = std::vector<MatrixC>(res.reduced.begin(), res.reduced.end());
            out["reduced_transformed"] =
                std::vector<MatrixC>(res.reduced_transformed.begin(), res.reduced_transformed.end());
            return out;
        },
        py::arg("config_json"));
    m.def(
        "run_scenario",
        [](const std::string& config_json, const std::filesystem::path& out_dir) {
            const auto cfg = ScenarioConfig::parse(config_json);
            py::gil_scoped_release release;
            return run_scenario(cfg, out_dir).summary.to_json();
        },
        py::arg("config_json"), py::arg("out_dir"));
    m.def(
        "compare_states",
        [](const std::filesystem::path& a, const std::filesystem::path& b) { return compare_states(a, b).to_json(); },
        py::arg("run_a"), py::arg("run_b"));
    m.def("config_hash", [](const std::string& config_json) { return ScenarioConfig::parse(config_json).hash(); });

    (void)base_config;
}

#include "fwmcat/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fwmcat/errors.hpp"
#include "fwmcat/io.hpp"
#include "fwmcat/trajectories.hpp"
#include "json.hpp"

namespace fwmcat {

using nlohmann::json;

const char* to_string(HamiltonianKind k) { return k == HamiltonianKind::int1 ? "int1" : "int2"; }

const char* to_string(SolverMethod m) {
    switch (m) {
        case SolverMethod::automatic: return "auto";
        case SolverMethod::dense: return "dense";
        case SolverMethod::trajectories: return "trajectories";
    }
    return "?";
}

namespace {

const std::set<std::string> kArtifacts{"timeseries", "distributions", "wigner", "marginals", "states"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
    return obj[key];
}

cplx parse_complex(const json& j, const std::string& where) {
    reject_unknown(j, {"abs2", "phase"}, where);
    const double abs2 = require(j, "abs2", where).get<double>();
    const double phase = j.value("phase", 0.0);
    if (!(abs2 >= 0)) throw ConfigError(where + ".abs2 must be >= 0");
    return std::polar(std::sqrt(abs2), phase);
}

std::string grid_text(const GridSpec& g) {
    std::ostringstream os;
    os.precision(17);
    os << g.x_min << ',' << g.x_max << ',' << g.x_count << ',' << g.p_min << ',' << g.p_max << ',' << g.p_count;
    return os.str();
}

json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(format_g9(v));
}

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

}  // namespace

ScenarioConfig ScenarioConfig::parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        reject_unknown(doc, {"hamiltonian", "couplings", "alpha1", "alpha2", "truncation", "tau_max", "tau_step",
                             "solver", "outputs"},
                       "config");
        const std::string ham = require(doc, "hamiltonian", "config").get<std::string>();
        if (ham == "int1") {
            cfg.hamiltonian = HamiltonianKind::int1;
        } else if (ham == "int2") {
            cfg.hamiltonian = HamiltonianKind::int2;
        } else {
            throw ConfigError("config.hamiltonian must be \"int1\" or \"int2\"");
        }

        const json& c = require(doc, "couplings", "config");
        reject_unknown(c, {"g", "g1", "g2", "g3", "g12", "g13", "g23", "gamma1", "gamma2", "gamma3"}, "couplings");
        auto& cs = cfg.couplings;
        cs.g = require(c, "g", "couplings").get<double>();
        cs.g1 = c.value("g1", 0.0);
        cs.g2 = c.value("g2", 0.0);
        cs.g3 = c.value("g3", 0.0);
        cs.g12 = c.value("g12", 0.0);
        cs.g13 = c.value("g13", 0.0);
        cs.g23 = c.value("g23", 0.0);
        cs.gamma1 = c.value("gamma1", 0.0);
        cs.gamma2 = c.value("gamma2", 0.0);
        cs.gamma3 = c.value("gamma3", 0.0);

        cfg.alpha1 = parse_complex(require(doc, "alpha1", "config"), "alpha1");
        cfg.alpha2 = parse_complex(require(doc, "alpha2", "config"), "alpha2");

        const json& t = require(doc, "truncation", "config");
        reject_unknown(t, {"max_occ", "total_cap"}, "truncation");
        cfg.max_occ = require(t, "max_occ", "truncation").get<std::vector<int>>();
        if (t.contains("total_cap") && !t["total_cap"].is_null()) cfg.total_cap = t["total_cap"].get<int>();

        cfg.tau_max = require(doc, "tau_max", "config").get<double>();
        cfg.tau_step = require(doc, "tau_step", "config").get<double>();

        if (doc.contains("solver")) {
            const json& s = doc["solver"];
            reject_unknown(s, {"method", "n_traj", "master_seed", "rtol", "atol", "workers"}, "solver");
            const std::string m = s.value("method", "auto");
            if (m == "auto") {
                cfg.method = SolverMethod::automatic;
            } else if (m == "dense") {
                cfg.method = SolverMethod::dense;
            } else if (m == "trajectories") {
                cfg.method = SolverMethod::trajectories;
            } else {
                throw ConfigError("solver.method must be \"auto\", \"dense\" or \"trajectories\"");
            }
            if (s.contains("n_traj")) {
                const auto n = s["n_traj"].get<long long>();
                if (n < 1) throw ConfigError("solver.n_traj must be >= 1");
                cfg.n_traj = static_cast<std::size_t>(n);
            }
            cfg.master_seed = s.value("master_seed", cfg.master_seed);
            cfg.rtol = s.value("rtol", cfg.rtol);
            cfg.atol = s.value("atol", cfg.atol);
            cfg.workers = s.value("workers", cfg.workers);
        }

        if (doc.contains("outputs")) {
            const json& o = doc["outputs"];
            reject_unknown(o, {"directory", "artifacts", "report_tau", "wigner_grid", "reference"}, "outputs");
            cfg.directory = o.value("directory", "");
            if (o.contains("artifacts")) {
                cfg.artifacts = o["artifacts"].get<std::vector<std::string>>();
                for (const auto& a : cfg.artifacts) {
                    if (!kArtifacts.count(a)) throw ConfigError("outputs.artifacts: unknown artifact \"" + a + "\"");
                }
            }
            if (o.contains("report_tau") && !o["report_tau"].is_null()) cfg.report_tau = o["report_tau"].get<double>();
            if (o.contains("wigner_grid")) cfg.wigner_grid = parse_grid_spec(o["wigner_grid"].get<std::string>());
            if (o.contains("reference") && !o["reference"].is_null()) cfg.reference = o["reference"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) { return parse(read_text(path)); }

void ScenarioConfig::validate() const {
    couplings.validate();
    if (max_occ.size() != 3) throw ConfigError("truncation.max_occ must list three modes");
    for (int m : max_occ) {
        if (m < 0) throw ConfigError("truncation.max_occ entries must be >= 0");
    }
    if (total_cap && *total_cap < 0) throw ConfigError("truncation.total_cap must be >= 0");
    if (!(tau_step > 0)) throw ConfigError("tau_step must be > 0");
    if (!(tau_max >= tau_step)) throw ConfigError("tau_max must be >= tau_step");
    if (!(rtol > 0) || !(atol > 0)) throw ConfigError("solver tolerances must be > 0");
    if (n_traj < 1) throw ConfigError("solver.n_traj must be >= 1");
    if (method == SolverMethod::trajectories && !couplings.dissipative()) {
        throw ConfigError("solver.method \"trajectories\" needs at least one gamma_j > 0");
    }
    if (report_tau && (*report_tau < 0 || *report_tau > tau_max + 1e-9 * tau_step)) {
        throw ConfigError("outputs.report_tau must lie in [0, tau_max]");
    }
    wigner_grid.validate();
}

std::string ScenarioConfig::canonical() const {
    json doc;
    doc["hamiltonian"] = to_string(hamiltonian);
    doc["couplings"] = {{"g", couplings.g},           {"g1", couplings.g1},         {"g2", couplings.g2},
                        {"g3", couplings.g3},         {"g12", couplings.g12},       {"g13", couplings.g13},
                        {"g23", couplings.g23},       {"gamma1", couplings.gamma1}, {"gamma2", couplings.gamma2},
                        {"gamma3", couplings.gamma3}};
    doc["alpha1"] = {{"abs2", std::norm(alpha1)}, {"phase", std::arg(alpha1)}};
    doc["alpha2"] = {{"abs2", std::norm(alpha2)}, {"phase", std::arg(alpha2)}};
    doc["truncation"] = {{"max_occ", max_occ}, {"total_cap", total_cap ? json(*total_cap) : json(nullptr)}};
    doc["tau_max"] = tau_max;
    doc["tau_step"] = tau_step;
    doc["solver"] = {{"method", to_string(method)}, {"n_traj", n_traj}, {"master_seed", master_seed},
                     {"rtol", rtol},                {"atol", atol}};
    doc["outputs"] = {{"artifacts", artifacts},
                      {"report_tau", report_tau ? json(*report_tau) : json(nullptr)},
                      {"wigner_grid", grid_text(wigner_grid)},
                      {"reference", reference}};
    return doc.dump();
}

std::string ScenarioConfig::hash() const { return content_hash(canonical()); }

bool ScenarioConfig::wants(const std::string& artifact) const {
    return std::find(artifacts.begin(), artifacts.end(), artifact) != artifacts.end();
}

std::string SummaryReport::to_json() const {
    json doc;
    doc["config_hash"] = config_hash;
    doc["hamiltonian"] = hamiltonian;
    doc["solver"] = solver;
    doc["decoupling"] = decoupling;
    doc["dimension"] = dimension;
    doc["tau_star"] = extremum.tau_n3_max ? json(num(*extremum.tau_n3_max)) : json(nullptr);
    doc["tau_star_n1_min"] = extremum.tau_n1_min ? json(num(*extremum.tau_n1_min)) : json(nullptr);
    doc["tau_star_agree"] = extremum.agree;
    doc["tau_report"] = num(tau_report);
    json modes_json = json::array();
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const auto& m = modes[j];
        json mj;
        mj["mode"] = j + 1;
        mj["n"] = num(m.n);
        mj["var_x"] = num(m.quad.var_x);
        mj["var_p"] = num(m.quad.var_p);
        mj["mean_x"] = num(m.quad.mean_x);
        mj["mean_p"] = num(m.quad.mean_p);
        mj["fano"] = m.fano ? num(*m.fano) : json("undefined");
        if (m.n_stderr) mj["n_stderr"] = num(*m.n_stderr);
        if (m.fano_stderr) mj["fano_stderr"] = num(*m.fano_stderr);
        mj["odd_probability"] = num(m.odd_probability);
        modes_json.push_back(std::move(mj));
    }
    doc["modes"] = std::move(modes_json);
    doc["schmidt_number"] = opt_num(schmidt_number);
    doc["purity3"] = num(purity3);
    if (conservation_drift) {
        doc["conservation_drift"] = {{"total_number", num((*conservation_drift)[0])},
                                     {"n1_minus_n2", num((*conservation_drift)[1])},
                                     {"two_n1_plus_n3", num((*conservation_drift)[2])}};
    }
    json w = json::array();
    for (const auto& ws : wigner) {
        w.push_back({{"mode", ws.mode},
                     {"picture", ws.picture},
                     {"min", num(ws.min)},
                     {"negativity_volume", num(ws.negativity_volume)},
                     {"normalization", num(ws.normalization)}});
    }
    doc["wigner"] = std::move(w);
    json f = json::object();
    for (const auto& [k, v] : fidelities) f[k] = {{"fidelity", num(v)}, {"root_fidelity", num(std::sqrt(v))}};
    doc["fidelities"] = std::move(f);
    doc["diagnostics"] = {{"accepted_steps", info.ode.accepted},
                          {"rejected_steps", info.ode.rejected},
                          {"rhs_evals", info.ode.rhs_evals},
                          {"max_norm_drift", num(info.max_norm_drift)},
                          {"max_norm_correction", num(info.max_norm_correction)},
                          {"rtol", num(info.rtol)},
                          {"atol", num(info.atol)},
                          {"sector_blocked", info.sector_blocked},
                          {"truncation_loss", num(truncation_loss)},
                          {"n_traj", n_traj},
                          {"master_seed", master_seed},
                          {"total_jumps", total_jumps}};
    doc["warnings"] = warnings;
    return doc.dump(2) + "\n";
}

ExtremumRecord extremum_from(const std::vector<double>& tau, const std::vector<std::array<ModeMoments, 3>>& moments,
                             bool enforce_agreement) {
    std::vector<double> n1, n3;
    for (const auto& m : moments) {
        n1.push_back(m[0].n);
        n3.push_back(m[2].n);
    }
    ExtremumRecord r;
    r.grid_step = tau.size() > 1 ? tau[1] - tau[0] : 0.0;
    const auto locate = [&](const std::vector<double>& v, ExtremumKind kind) -> std::optional<double> {
        try {
            return find_extremal_time(tau, v, kind);
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    };
    r.tau_n3_max = locate(n3, ExtremumKind::first_max);
    r.tau_n1_min = locate(n1, ExtremumKind::first_min);
    if (!r.tau_n3_max || !r.tau_n1_min) return r;
    r.agree = std::abs(*r.tau_n3_max - *r.tau_n1_min) <= r.grid_step * (1 + 1e-9);
    if (enforce_agreement && !r.agree) {
        std::ostringstream msg;
        msg << "extremal times disagree: n3 max at " << *r.tau_n3_max << ", n1 min at " << *r.tau_n1_min;
        throw NumericalError(msg.str());
    }
    return r;
}

namespace {

/// Per-grid moments and rho3, plus every single-mode matrix in both pictures at flagged grid times.
class ScenarioAccumulator : public EnsembleAccumulator {
public:
    ScenarioAccumulator(const FockSpace& space, const std::vector<double>& grid, const std::vector<bool>& flagged,
                        double g, double phase_sign)
        : space_(space), grid_(grid), flagged_(flagged), g_(g), sign_(phase_sign),
          moments_(grid.size()), rho3_(grid.size()), extra_(grid.size()) {
        for (std::size_t j = 0; j < 3; ++j) {
            tracers_.emplace_back(std::make_shared<const PartialTracer>(space, std::vector<std::size_t>{j}));
            evaluators_.emplace_back(std::make_shared<const ModeMomentEvaluator>(space, j));
        }
        for (std::size_t k = 0; k < grid.size(); ++k) {
            rho3_[k] = zero(2);
            if (flagged_[k]) {
                for (std::size_t s = 0; s < 6; ++s) extra_[k].push_back(zero(s % 3));
            }
        }
    }

    void add(std::size_t, std::size_t k, const VectorC& psi) override {
        for (std::size_t j = 0; j < 3; ++j) moments_[k][j] += (*evaluators_[j])(psi);
        tracers_[2]->accumulate(psi, rho3_[k]);
        if (!flagged_[k]) return;
        const VectorC turned = apply_number_phase(space_, psi, g_, sign_ * grid_[k]);
        for (std::size_t j = 0; j < 3; ++j) {
            tracers_[j]->accumulate(psi, extra_[k][j]);
            tracers_[j]->accumulate(turned, extra_[k][3 + j]);
        }
    }

    void merge(const EnsembleAccumulator& other) override {
        const auto& o = dynamic_cast<const ScenarioAccumulator&>(other);
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            for (std::size_t j = 0; j < 3; ++j) moments_[k][j] += o.moments_[k][j];
            rho3_[k] += o.rho3_[k];
            for (std::size_t s = 0; s < extra_[k].size(); ++s) extra_[k][s] += o.extra_[k][s];
        }
    }

private:
    MatrixC zero(std::size_t mode) const {
        const auto d = static_cast<Eigen::Index>(space_.local_dim(mode));
        return MatrixC::Zero(d, d);
    }

    const FockSpace& space_;
    const std::vector<double>& grid_;
    const std::vector<bool>& flagged_;
    double g_, sign_;
    std::vector<std::shared_ptr<const PartialTracer>> tracers_;
    std::vector<std::shared_ptr<const ModeMomentEvaluator>> evaluators_;

public:
    std::vector<std::array<ModeMoments, 3>> moments_;
    std::vector<MatrixC> rho3_;
    std::vector<std::vector<MatrixC>> extra_;   // [grid][raw 1..3, transformed 1..3]
};

std::size_t grid_index_of(const std::vector<double>& grid, double tau, double step) {
    const auto k = static_cast<std::size_t>(std::llround(tau / step));
    if (k >= grid.size() || std::abs(grid[k] - tau) > 1e-6 * step) {
        std::ostringstream msg;
        msg << "report time " << tau << " is not a grid point of step " << step;
        throw ConfigError(msg.str());
    }
    return k;
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Standard errors of <n> (per trajectory) and of the Fano factor (batch means over 20 batches).
std::pair<double, std::optional<double>> ensemble_errors(const std::vector<double>& n, const std::vector<double>& n2) {
    const std::size_t count = n.size();
    const double n_err = sample_sd(n) / std::sqrt(static_cast<double>(count));
    const std::size_t batches = std::min<std::size_t>(20, count / 2);
    if (batches < 2) return {n_err, std::nullopt};
    std::vector<double> ff;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * count / batches, hi = (b + 1) * count / batches;
        double m1 = 0, m2 = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            m1 += n[k];
            m2 += n2[k];
        }
        m1 /= static_cast<double>(hi - lo);
        m2 /= static_cast<double>(hi - lo);
        if (m1 <= 1e-12) return {n_err, std::nullopt};
        ff.push_back((m2 - m1 * m1) / m1);
    }
    return {n_err, sample_sd(ff) / std::sqrt(static_cast<double>(batches))};
}

}  // namespace

ScenarioResult simulate(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto space = build_space(cfg.max_occ, cfg.total_cap);
    const CouplingSet& c = cfg.couplings;
    const SparseOperator h =
        cfg.hamiltonian == HamiltonianKind::int1 ? build_h_int1(*space, c) : build_h_int2(*space, c.g);
    const PureState psi0 = coherent_product_state(space, {cfg.alpha1, cfg.alpha2, cplx{}});
    const std::vector<double> grid = uniform_grid(cfg.tau_max, cfg.tau_step);
    const auto collapse = collapse_ops(*space, c);
    const OdeTolerances tol{cfg.rtol, cfg.atol};
    // int2 states live in the rotated ladder basis; the transformation maps each picture onto the other
    const double phase_sign = cfg.hamiltonian == HamiltonianKind::int2 ? 1.0 : -1.0;

    ScenarioResult res;
    res.tau = grid;
    auto& sum = res.summary;
    sum.config_hash = cfg.hash();
    sum.hamiltonian = to_string(cfg.hamiltonian);
    sum.decoupling = to_string(validate_decoupling(c));
    sum.dimension = space->dimension();
    sum.truncation_loss = psi0.truncation_loss;

    SolverMethod method = cfg.method;
    if (method == SolverMethod::automatic && c.dissipative()) {
        method = space->dimension() <= kDenseLimit ? SolverMethod::dense : SolverMethod::trajectories;
    }
    if (method == SolverMethod::dense && space->dimension() > kDenseLimit) {
        throw ConfigError("dense solver requested for dimension " + std::to_string(space->dimension()) +
                          " above the dense limit " + std::to_string(kDenseLimit));
    }

    std::vector<PartialTracer> tracers;
    std::vector<ModeMomentEvaluator> evaluators;
    for (std::size_t j = 0; j < 3; ++j) {
        tracers.emplace_back(*space, std::vector<std::size_t>{j});
        evaluators.emplace_back(*space, j);
    }
    res.moments.resize(grid.size());
    res.purity3.resize(grid.size());

    auto choose_report = [&](bool enforce) {
        sum.extremum = extremum_from(grid, res.moments, enforce);
        double t = grid.back();
        if (cfg.report_tau) {
            t = *cfg.report_tau;
        } else if (sum.extremum.tau_n3_max) {
            t = grid[std::min(grid.size() - 1,
                              static_cast<std::size_t>(std::llround(*sum.extremum.tau_n3_max / cfg.tau_step)))];
        } else {
            sum.warnings.push_back("n3 has no interior maximum; reporting at tau_max");
        }
        res.report_index = grid_index_of(grid, t, cfg.tau_step);
        sum.tau_report = grid[res.report_index];
    };

    bool pure = false;
    if (method == SolverMethod::automatic) {
        sum.solver = "unitary";
        pure = true;
        const UnitaryResult ur = evolve_unitary(h, psi0, grid, tol);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const VectorC& psi = ur.states[k].amplitudes;
            for (std::size_t j = 0; j < 3; ++j) res.moments[k][j] = evaluators[j](psi);
            res.purity3[k] = purity(tracers[2](psi));
        }
        sum.info = ur.info;
        choose_report(true);
        const PureState& at = ur.states[res.report_index];
        const VectorC turned = apply_number_phase(*space, at.amplitudes, c.g, phase_sign * sum.tau_report);
        for (std::size_t j = 0; j < 3; ++j) {
            res.reduced[j] = tracers[j](at.amplitudes);
            res.reduced_transformed[j] = tracers[j](turned);
        }
        res.report_state = at;
    } else if (method == SolverMethod::dense) {
        sum.solver = "dense";
        const LindbladResult lr = evolve_lindblad_dense(h, collapse, to_density(psi0), grid, tol);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            for (std::size_t j = 0; j < 3; ++j) res.moments[k][j] = moments(tracers[j](lr.states[k].matrix));
            res.purity3[k] = purity(tracers[2](lr.states[k].matrix));
        }
        sum.info = lr.info;
        choose_report(!c.dissipative());
        const MatrixC& rho = lr.states[res.report_index].matrix;
        const VectorC phases = apply_number_phase(*space, VectorC::Ones(rho.rows()), c.g, phase_sign * sum.tau_report);
        const MatrixC turned = phases.asDiagonal() * rho * phases.conjugate().asDiagonal();
        for (std::size_t j = 0; j < 3; ++j) {
            res.reduced[j] = tracers[j](rho);
            res.reduced_transformed[j] = tracers[j](turned);
        }
    } else {
        sum.solver = "trajectories";
        std::vector<bool> flagged(grid.size(), !cfg.report_tau.has_value());
        if (cfg.report_tau) flagged[grid_index_of(grid, *cfg.report_tau, cfg.tau_step)] = true;

        TrajectoryOptions opt;
        opt.tol = tol;
        opt.workers = cfg.workers;
        opt.make_accumulator = [&]() -> std::unique_ptr<EnsembleAccumulator> {
            return std::make_unique<ScenarioAccumulator>(*space, grid, flagged, c.g, phase_sign);
        };
        opt.probe = [&](std::size_t k, const VectorC& psi) {
            std::vector<cplx> out;
            if (!flagged[k]) return out;
            for (std::size_t j = 0; j < 3; ++j) {
                const ModeMoments m = evaluators[j](psi);
                out.push_back(m.n);
                out.push_back(m.n2);
            }
            return out;
        };
        const TrajectoryEnsemble ens = evolve_trajectories(h, collapse, psi0, grid, cfg.n_traj, cfg.master_seed, opt);
        const auto& acc = dynamic_cast<const ScenarioAccumulator&>(*ens.accumulated);
        const double inv = 1.0 / static_cast<double>(cfg.n_traj);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            res.moments[k] = acc.moments_[k];
            for (auto& m : res.moments[k]) m *= inv;
            res.purity3[k] = purity(MatrixC(acc.rho3_[k] * inv));
        }
        sum.info = ens.info;
        sum.n_traj = cfg.n_traj;
        sum.master_seed = cfg.master_seed;
        sum.total_jumps = ens.total_jumps();
        choose_report(false);
        const auto& extra = acc.extra_[res.report_index];
        for (std::size_t j = 0; j < 3; ++j) {
            res.reduced[j] = extra[j] * inv;
            res.reduced_transformed[j] = extra[3 + j] * inv;
            std::vector<double> n, n2;
            for (const auto& traj : ens.probe_values) {
                n.push_back(traj[res.report_index][2 * j].real());
                n2.push_back(traj[res.report_index][2 * j + 1].real());
            }
            const auto [n_err, ff_err] = ensemble_errors(n, n2);
            sum.modes[j].n_stderr = n_err;
            sum.modes[j].fano_stderr = ff_err;
        }
    }

    const std::size_t r = res.report_index;
    for (std::size_t j = 0; j < 3; ++j) {
        auto& mr = sum.modes[j];
        const ModeMoments& m = res.moments[r][j];
        mr.n = m.n;
        mr.quad = quadrature_variances(m);
        try {
            mr.fano = fano(m);
        } catch (const UndefinedError&) {
            mr.fano.reset();
        }
        mr.distribution = photon_distribution(res.reduced[j]);
        for (std::size_t n = 1; n < mr.distribution.size(); n += 2) mr.odd_probability += mr.distribution[n];
        const double edge = mr.distribution.back();
        if (edge > 1e-8) {
            sum.warnings.push_back("mode " + std::to_string(j + 1) + " population at the truncation edge is " +
                                   format_g9(edge));
        }
    }
    sum.purity3 = res.purity3[r];
    if (pure) sum.schmidt_number = 1.0 / res.purity3[r];
    if (!c.dissipative()) {
        std::array<double, 3> drift{};
        auto conserved = [](const std::array<ModeMoments, 3>& m) {
            return std::array<double, 3>{m[0].n + m[1].n + m[2].n, m[0].n - m[1].n, 2 * m[0].n + m[2].n};
        };
        const auto ref = conserved(res.moments.front());
        for (const auto& m : res.moments) {
            const auto q = conserved(m);
            for (std::size_t i = 0; i < 3; ++i) drift[i] = std::max(drift[i], std::abs(q[i] - ref[i]));
        }
        sum.conservation_drift = drift;
    }
    if (sum.truncation_loss > 1e-8) {
        sum.warnings.push_back("initial coherent state truncation loss " + format_g9(sum.truncation_loss));
    }
    return res;
}

ExtremumRecord scan_extremum(const ScenarioConfig& config) {
    ScenarioConfig cfg = config;
    cfg.artifacts.clear();
    const auto rec = simulate(cfg).summary.extremum;
    if (!rec.tau_n3_max) throw NumericalError("scan: n3 has no interior maximum on the grid");
    return rec;
}

std::pair<MatrixC, MatrixC> common_dimension(const MatrixC& a, const MatrixC& b) {
    const Eigen::Index d = std::max(a.rows(), b.rows());
    MatrixC pa = MatrixC::Zero(d, d), pb = MatrixC::Zero(d, d);
    pa.topLeftCorner(a.rows(), a.cols()) = a;
    pb.topLeftCorner(b.rows(), b.cols()) = b;
    return {pa, pb};
}

namespace {

std::filesystem::path state_path(const std::filesystem::path& dir, std::size_t mode, bool transformed) {
    return dir / ("state_mode" + std::to_string(mode + 1) + (transformed ? "_transformed" : "") + ".json");
}

std::string header_text(const ScenarioConfig& cfg, const SummaryReport& sum) {
    return "# config_hash " + sum.config_hash + "\n# hamiltonian " + to_string(cfg.hamiltonian) + " solver " +
           sum.solver + "\n";
}

void write_marginals(const std::filesystem::path& path, const WignerGrid& grid, const std::string& header) {
    std::string out = header + "# axis q density\n";
    const auto px = marginal_x(grid), pp = marginal_p(grid);
    for (std::size_t i = 0; i < px.size(); ++i) out += "x " + format_g9(grid.spec.x(i)) + " " + format_g9(px[i]) + "\n";
    for (std::size_t j = 0; j < pp.size(); ++j) out += "p " + format_g9(grid.spec.p(j)) + " " + format_g9(pp[j]) + "\n";
    write_text(path, out);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    ScenarioResult res = simulate(cfg);
    auto& sum = res.summary;
    const std::string header = header_text(cfg, sum);
    std::filesystem::create_directories(out_dir);

    if (cfg.wants("timeseries")) {
        std::string out = header + "# tau n1 n2 n3 var_x1 var_p1 var_x3 var_p3 ff1 ff3 K purity3\n";
        for (std::size_t k = 0; k < res.tau.size(); ++k) {
            const auto& m = res.moments[k];
            const auto q1 = quadrature_variances(m[0]), q3 = quadrature_variances(m[2]);
            auto ff = [](const ModeMoments& mm) {
                try {
                    return format_g9(fano(mm));
                } catch (const UndefinedError&) {
                    return std::string("undefined");
                }
            };
            out += format_g9(res.tau[k]) + ' ' + format_g9(m[0].n) + ' ' + format_g9(m[1].n) + ' ' +
                   format_g9(m[2].n) + ' ' + format_g9(q1.var_x) + ' ' + format_g9(q1.var_p) + ' ' +
                   format_g9(q3.var_x) + ' ' + format_g9(q3.var_p) + ' ' + ff(m[0]) + ' ' + ff(m[2]) + ' ' +
                   (sum.schmidt_number ? format_g9(1.0 / res.purity3[k]) : std::string("undefined")) + ' ' +
                   format_g9(res.purity3[k]) + '\n';
        }
        write_text(out_dir / "timeseries.tsv", out);
    }

    if (cfg.wants("distributions")) {
        std::string out = header + "# tau " + format_g9(sum.tau_report) + "\n# n P1 P2 P3\n";
        std::size_t rows = 0;
        for (const auto& m : sum.modes) rows = std::max(rows, m.distribution.size());
        for (std::size_t n = 0; n < rows; ++n) {
            out += std::to_string(n);
            for (const auto& m : sum.modes) out += ' ' + format_g9(n < m.distribution.size() ? m.distribution[n] : 0.0);
            out += '\n';
        }
        write_text(out_dir / "distributions.tsv", out);
    }

    if (cfg.wants("wigner") || cfg.wants("marginals")) {
        for (std::size_t j : {std::size_t{0}, std::size_t{2}}) {
            for (bool transformed : {false, true}) {
                const std::string picture = transformed ? "transformed" : "raw";
                const std::string stem = "mode" + std::to_string(j + 1) + "_" + picture;
                const MatrixC& rho = transformed ? res.reduced_transformed[j] : res.reduced[j];
                const WignerGrid grid = wigner(rho, cfg.wigner_grid,
                                               "mode " + std::to_string(j + 1) + " " + picture + " picture tau " +
                                                   format_g9(sum.tau_report));
                sum.wigner.push_back({j + 1, picture, wigner_min(grid), negativity_volume(grid), grid.normalization});
                if (!grid.warning.empty()) sum.warnings.push_back("wigner " + stem + ": " + grid.warning);
                if (cfg.wants("wigner")) {
                    write_wigner_grid(out_dir / ("wigner_" + stem + ".tsv"), grid,
                                      {"config_hash " + sum.config_hash, "tau " + format_g9(sum.tau_report)});
                }
                if (cfg.wants("marginals")) write_marginals(out_dir / ("marginals_" + stem + ".tsv"), grid, header);
            }
        }
    }

    if (cfg.wants("states")) {
        for (std::size_t j = 0; j < 3; ++j) {
            for (bool transformed : {false, true}) {
                DensityMatrix rho;
                rho.matrix = transformed ? res.reduced_transformed[j] : res.reduced[j];
                rho.modes = {j};
                rho.local_dims = {static_cast<std::size_t>(rho.matrix.rows())};
                write_state(state_path(out_dir, j, transformed), rho,
                            {sum.tau_report, sum.config_hash, transformed ? "transformed" : "raw"});
            }
        }
        if (res.report_state) {
            write_state(out_dir / "state_full.json", *res.report_state, {sum.tau_report, sum.config_hash, "raw"});
        }
    }

    if (!cfg.reference.empty()) {
        for (std::size_t j = 0; j < 3; ++j) {
            const auto path = state_path(cfg.reference, j, false);
            if (!std::filesystem::exists(path)) continue;
            const StateFile ref = read_state(path);
            if (std::abs(ref.meta.tau - sum.tau_report) > 1e-9) {
                throw ConfigError("reference state " + path.string() + " was saved at a different tau");
            }
            const auto [a, b] = common_dimension(res.reduced[j], single_mode_from(ref, j).matrix);
            sum.fidelities.emplace_back("mode" + std::to_string(j + 1), fidelity(a, b));
        }
    }

    write_text(out_dir / "summary.json", sum.to_json());
    return res;
}

std::string ComparisonRecord::to_json() const {
    json doc;
    doc["tau_a"] = num(tau_a);
    doc["tau_b"] = num(tau_b);
    json f = json::object(), r = json::object(), t = json::object();
    for (std::size_t j = 0; j < 3; ++j) {
        const std::string key = "mode" + std::to_string(j + 1);
        if (fidelity[j]) f[key] = num(*fidelity[j]);
        if (root_fidelity[j]) r[key] = num(*root_fidelity[j]);
        if (trace_distance[j]) t[key] = num(*trace_distance[j]);
    }
    doc["fidelity"] = std::move(f);
    doc["root_fidelity"] = std::move(r);
    doc["trace_distance"] = std::move(t);
    return doc.dump(2) + "\n";
}

ComparisonRecord compare_states(const std::filesystem::path& run_a, const std::filesystem::path& run_b) {
    ComparisonRecord rec;
    bool any = false;
    for (std::size_t j = 0; j < 3; ++j) {
        const auto pa = state_path(run_a, j, false), pb = state_path(run_b, j, false);
        if (!std::filesystem::exists(pa) || !std::filesystem::exists(pb)) continue;
        const StateFile fa = read_state(pa), fb = read_state(pb);
        if (std::abs(fa.meta.tau - fb.meta.tau) > 1e-9) {
            throw ConfigError("compare: runs saved their states at different tau (" + format_g9(fa.meta.tau) + " vs " +
                              format_g9(fb.meta.tau) + ")");
        }
        rec.tau_a = fa.meta.tau;
        rec.tau_b = fb.meta.tau;
        const auto [a, b] = common_dimension(single_mode_from(fa, j).matrix, single_mode_from(fb, j).matrix);
        rec.fidelity[j] = fidelity(a, b);
        rec.root_fidelity[j] = root_fidelity(a, b);
        rec.trace_distance[j] = trace_distance(a, b);
        any = true;
    }
    if (!any) {
        throw ConfigError("compare: no matching state_mode<j>.json files in " + run_a.string() + " and " +
                          run_b.string());
    }
    return rec;
}

}  // namespace fwmcat

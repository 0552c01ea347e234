// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status 1 if any fail.
// Optional arguments select criteria by number, e.g. `acceptance 1 4 8`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fwmcat/dynamics.hpp"
#include "fwmcat/errors.hpp"
#include "fwmcat/observables.hpp"
#include "fwmcat/scenario.hpp"
#include "fwmcat/trajectories.hpp"
#include "fwmcat/wigner.hpp"
#include "oracles.hpp"

using namespace fwmcat;

namespace {

const std::filesystem::path kPresets = FWMCAT_PRESETS;

/// Collects the sub-checks of one criterion.
struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        ok = ok && cond;
        detail << "    " << (cond ? "ok   " : "FAIL ") << what << "\n";
    }
    void note(const std::string& what) { detail << "    info " << what << "\n"; }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[192];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

void rel(Check& c, const std::string& name, double got, double want, double tol) {
    const double r = std::abs(got - want) / std::abs(want);
    c.expect(r <= tol, name + fmt(" = %.7g (target %.7g", got, want) + fmt(", rel %.2e)", r));
}

void abs_within(Check& c, const std::string& name, double got, double want, double tol) {
    c.expect(std::abs(got - want) <= tol, name + fmt(" = %.7g (target %.7g", got, want) + fmt(" +- %g)", tol));
}

ScenarioConfig preset(const std::string& name) { return ScenarioConfig::load(kPresets / (name + ".json")); }

/// Lazily evaluated preset runs shared between criteria.
class Runs {
public:
    const ScenarioResult& get(const std::string& key, const std::function<ScenarioConfig()>& make) {
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            std::fprintf(stderr, "[acceptance] simulating %s\n", key.c_str());
            it = cache_.emplace(key, simulate(make())).first;
        }
        return it->second;
    }
    const ScenarioResult& s1() { return get("S1", [] { return preset("paper-s1"); }); }
    const ScenarioResult& s2() { return get("S2", [] { return preset("paper-s2"); }); }
    const ScenarioResult& s3() { return get("S3", [] { return preset("paper-s3"); }); }
    const ScenarioResult& large(const std::string& name) {
        return get(name + "-large", [name] {
            auto cfg = preset(name);
            cfg.max_occ = {31, 31, 42};
            cfg.total_cap = 46;
            return cfg;
        });
    }

private:
    std::map<std::string, ScenarioResult> cache_;
};

double ff(const ModeReport& m) {
    if (!m.fano) throw UndefinedError("Fano factor undefined");
    return *m.fano;
}

// ---------------------------------------------------------------------------

Check extremal_time(Runs& runs) {
    Check c;
    for (const auto& [name, res] : {std::pair<std::string, const ScenarioResult*>{"S1", &runs.s1()}, {"S2", &runs.s2()}}) {
        const auto& e = res->summary.extremum;
        if (!e.tau_n3_max) {
            c.expect(false, name + " tau* not found");
            continue;
        }
        abs_within(c, name + " tau*", *e.tau_n3_max, 0.190, 0.001);
        if (e.tau_n1_min) c.note(name + fmt(" first n1 minimum at %.6f", *e.tau_n1_min));
    }
    return c;
}

Check s1_values(Runs& runs) {
    Check c;
    const auto& s = runs.s1().summary;
    c.note(fmt("report tau = %.4f", s.tau_report));
    rel(c, "Var(x1)", s.modes[0].quad.var_x, 2.312092, 0.01);
    rel(c, "Var(p1)", s.modes[0].quad.var_p, 2.312092, 0.01);
    rel(c, "Var(x3)", s.modes[2].quad.var_x, 22.362901, 0.01);
    rel(c, "Var(p3)", s.modes[2].quad.var_p, 0.526722, 0.01);
    abs_within(c, "Schmidt number", s.schmidt_number.value_or(NAN), 2.0248, 0.01);
    rel(c, "FF1", ff(s.modes[0]), 3.5071, 0.005);
    rel(c, "FF3", ff(s.modes[2]), 3.6268, 0.005);
    c.expect(s.modes[2].odd_probability < 1e-10, fmt("P3(odd) = %.3e (< 1e-10)", s.modes[2].odd_probability));
    return c;
}

Check s2_values(Runs& runs) {
    Check c;
    const auto& s = runs.s2().summary;
    c.note(fmt("report tau = %.4f", s.tau_report));
    rel(c, "n1", s.modes[0].n, 3.527376, 0.003);
    rel(c, "n3", s.modes[2].n, 10.9452, 0.003);
    rel(c, "Var(x1)", s.modes[0].quad.var_x, 3.232426, 0.01);
    rel(c, "Var(p1)", s.modes[0].quad.var_p, 2.864985, 0.01);
    rel(c, "Var(x3)", s.modes[2].quad.var_x, 14.199947, 0.01);
    rel(c, "Var(p3)", s.modes[2].quad.var_p, 8.689676, 0.01);
    abs_within(c, "Schmidt number", s.schmidt_number.value_or(NAN), 6.8582, 0.03);
    rel(c, "FF1", ff(s.modes[0]), 3.5072, 0.005);
    rel(c, "FF3", ff(s.modes[2]), 3.6269, 0.005);
    return c;
}

Check picture_invariance(Runs& runs) {
    Check c;
    const auto& a = runs.s1().summary;
    const auto& b = runs.s2().summary;
    for (std::size_t j = 0; j < 3; ++j) {
        const auto& pa = a.modes[j].distribution;
        const auto& pb = b.modes[j].distribution;
        double worst = 0;
        for (std::size_t n = 0; n < std::max(pa.size(), pb.size()); ++n) {
            const double x = n < pa.size() ? pa[n] : 0.0;
            const double y = n < pb.size() ? pb[n] : 0.0;
            worst = std::max(worst, std::abs(x - y));
        }
        const std::string m = std::to_string(j + 1);
        c.expect(worst <= 1e-6, "max |P" + m + "(n) S1 - S2| = " + fmt("%.2e", worst));
        const double dn = std::abs(a.modes[j].n - b.modes[j].n) / std::abs(b.modes[j].n);
        c.expect(dn <= 1e-4, "n" + m + fmt(" rel diff %.2e", dn));
        const double df = std::abs(ff(a.modes[j]) - ff(b.modes[j])) / std::abs(ff(b.modes[j]));
        c.expect(df <= 1e-4, "FF" + m + fmt(" rel diff %.2e", df));
    }
    return c;
}

Check dissipative(Runs& runs) {
    Check c;
    const auto& s = runs.s3().summary;
    const auto& ref = runs.s2();
    c.note(fmt("n_traj = %.0f, jumps = %.0f", static_cast<double>(s.n_traj), static_cast<double>(s.total_jumps)) +
           fmt(", report tau = %.4f", s.tau_report));
    for (std::size_t j : {0u, 2u}) {
        const double want = j == 0 ? 3.3486 : 3.5557;
        const double se = s.modes[j].fano_stderr.value_or(0.0);
        const double tol = std::max(0.1, 3 * se);
        abs_within(c, "FF" + std::to_string(j + 1) + fmt(" (se %.3g)", se), ff(s.modes[j]), want, tol);
    }
    const auto [a, b] = common_dimension(ref.reduced[2], runs.s3().reduced[2]);
    const double root = root_fidelity(a, b);
    abs_within(c, "F(rho3 S2, rho3 S3)", root * root, 0.903425, 0.015);
    c.note(fmt("root fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)) = %.6f", root));
    c.expect(s.modes[2].odd_probability > 0.01, fmt("P3(odd) = %.4f (> 0.01)", s.modes[2].odd_probability));
    return c;
}

Check conservation(Runs& runs) {
    Check c;
    for (const auto& [name, res] : {std::pair<std::string, const ScenarioResult*>{"S1", &runs.s1()}, {"S2", &runs.s2()}}) {
        const auto& s = res->summary;
        if (!s.conservation_drift) {
            c.expect(false, name + " has no conservation record");
            continue;
        }
        const auto& d = *s.conservation_drift;
        c.expect(d[0] < 1e-6, name + fmt(" drift <N> = %.2e", d[0]));
        c.expect(d[1] < 1e-6, name + fmt(" drift n1 - n2 = %.2e", d[1]));
        c.expect(d[2] < 1e-6, name + fmt(" drift 2 n1 + n3 = %.2e", d[2]));
        c.expect(s.info.max_norm_drift < 1e-7, name + fmt(" norm drift = %.2e", s.info.max_norm_drift));
        double worst = 0, worst_initial = 0;
        const double n1_0 = res->moments.front()[0].n, n3_0 = res->moments.front()[2].n;
        for (const auto& m : res->moments) {
            worst = std::max(worst, std::abs(m[0].n - (9.0 - m[2].n / 2)));
            worst_initial = std::max(worst_initial, std::abs((m[0].n - n1_0) + (m[2].n - n3_0) / 2));
        }
        c.expect(worst < 1e-5, name + fmt(" max |n1 - (9 - n3/2)| = %.3e", worst));
        c.note(name + fmt(" n1(0) = %.9f; max |n1 - (n1(0) - (n3 - n3(0))/2)| = %.2e", n1_0, worst_initial));
    }
    return c;
}

Check trajectories_vs_dense() {
    Check c;
    auto s = build_space({3, 3, 3});
    const auto couplings = CouplingSet::decoupled(1.0, 0.2);
    const cplx alpha = std::polar(1.0, M_PI / 4);
    const auto psi = coherent_product_state(s, {alpha, alpha, 0.0}, 0.05);
    c.note(fmt("truncation loss of the initial state %.4f", psi.truncation_loss));
    const auto h = build_h_int1(*s, couplings);
    const auto collapse = collapse_ops(*s, couplings);
    const auto grid = uniform_grid(1.0, 0.25);
    const auto dense = evolve_lindblad_dense(h, collapse, to_density(psi), grid);

    const std::size_t n_traj = 4000;
    std::vector<ModeMomentEvaluator> eval;
    for (std::size_t j = 0; j < 3; ++j) eval.emplace_back(*s, j);
    TrajectoryOptions opt;
    opt.probe = [&](std::size_t, const VectorC& v) {
        std::vector<cplx> out;
        for (const auto& e : eval) out.emplace_back(e(v).n);
        return out;
    };
    const auto ens = evolve_trajectories(h, collapse, psi, grid, n_traj, 20240611, opt);
    c.note(fmt("%.0f trajectories, %.0f jumps", static_cast<double>(n_traj), static_cast<double>(ens.total_jumps())));
    for (std::size_t k = 1; k < grid.size(); ++k) {
        for (std::size_t j = 0; j < 3; ++j) {
            double sum = 0, sum2 = 0;
            for (std::size_t t = 0; t < n_traj; ++t) {
                const double x = ens.probe_values[t][k][j].real();
                sum += x;
                sum2 += x * x;
            }
            const double mean = sum / n_traj;
            const double se = std::sqrt(std::max(0.0, sum2 / n_traj - mean * mean) / (n_traj - 1));
            const double exact = mean_photon(partial_trace(dense.states[k], {j}).matrix);
            c.expect(std::abs(mean - exact) <= 3 * se,
                     "tau " + fmt("%.2f", grid[k]) + " n" + std::to_string(j + 1) +
                         fmt(": ensemble %.6f, dense %.6f", mean, exact) + fmt(", %.2f se", std::abs(mean - exact) / se));
        }
    }

    auto closed = couplings;
    closed.gamma1 = closed.gamma2 = closed.gamma3 = 0.0;
    const auto lossless = evolve_lindblad_dense(h, collapse_ops(*s, closed), to_density(psi), grid);
    const auto unitary = evolve_unitary(h, psi, grid);
    double worst = 0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        worst = std::max(worst, trace_distance(lossless.states[k].matrix, to_density(unitary.states[k]).matrix));
    c.expect(worst <= 1e-6, fmt("gamma = 0: max trace distance dense vs unitary = %.2e", worst));
    return c;
}

Check wigner_suite(Runs& runs) {
    Check c;
    std::mt19937_64 rng(2024);
    double worst = 0;
    for (int d = 1; d <= 10; ++d) {
        const auto rho = oracle::random_density(rng, d, 1 + d % 3);
        for (auto [x, p] : {std::pair{0.0, 0.0}, {0.9, -1.3}, {-2.2, 0.5}, {1.7, 2.1}})
            worst = std::max(worst, std::abs(wigner_point(rho, x, p) - oracle::wigner_integral(rho, x, p)));
    }
    c.expect(worst <= 1e-6, fmt("kernel vs direct integral, dim <= 10: max error %.2e", worst));

    const MatrixC vac = MatrixC::Identity(1, 1);
    const double w0 = wigner_point(vac, 0, 0);
    c.expect(std::abs(w0 - 1 / M_PI) <= 1e-6, fmt("vacuum W(0,0) = %.9f (1/pi = %.9f)", w0, 1 / M_PI));

    const auto& s1 = runs.s1();
    const auto grid = wigner(s1.reduced[2], preset("paper-s1").wigner_grid);
    c.expect(std::abs(grid.normalization - 1) <= 2e-3, fmt("S1 mode 3 normalization = %.6f", grid.normalization));
    const double wmin = wigner_min(grid);
    c.expect(wmin < 0, fmt("S1 mode 3 min W = %.4f (< 0)", wmin));

    const auto& v = grid.values;
    const Eigen::MatrixXd mirror_x = v.colwise().reverse();
    const Eigen::MatrixXd mirror_p = v.rowwise().reverse();
    const double scale = v.cwiseAbs().maxCoeff();
    const double ex = (v - mirror_x).cwiseAbs().maxCoeff() / scale;
    const double ep = (v - mirror_p).cwiseAbs().maxCoeff() / scale;
    c.expect(ex <= 1e-6 && ep <= 1e-6, fmt("mirror symmetry x -> -x: %.1e, p -> -p: %.1e", ex, ep));

    // Two lobes: the x marginal peaks symmetrically away from the origin.
    const auto mx = marginal_x(grid);
    const std::size_t half = mx.size() / 2;
    const auto left = std::max_element(mx.begin(), mx.begin() + half);
    const double x_peak = grid.spec.x(static_cast<std::size_t>(left - mx.begin()));
    const bool lobes = std::abs(x_peak) > 1.0 && mx[half] < 0.5 * *left;
    c.expect(lobes, fmt("double lobe: x marginal peaks at x = +-%.2f, centre/peak = %.3f", std::abs(x_peak),
                        mx[half] / *left));
    return c;
}

Check ehrenfest() {
    Check c;
    auto s = build_space({8, 8, 10}, 10);
    std::mt19937_64 rng(77);
    const auto c1 = CouplingSet::decoupled(1.0);
    const CouplingSet only_fwm{1.0};
    const auto h1 = build_h_int1(*s, c1);
    const auto h2 = build_h_int2(*s, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        VectorC v = VectorC::Zero(s->dimension());
        for (std::size_t i = 0; i < s->dimension(); ++i) {
            auto o = s->occupation(i);
            if (o[0] + o[1] + o[2] <= 6) v[i] = oracle::random_vector(rng, 1)[0];
        }
        const PureState psi{s, v.normalized(), 0.0};
        for (std::size_t m = 0; m < 3; ++m) {
            for (auto [h, cs, label] : {std::tuple{&h1, &c1, "int1"}, std::tuple{&h2, &only_fwm, "int2"}}) {
                const double r1 = ehrenfest_residual(*h, psi, *cs, m, 2e-3);
                const double r2 = ehrenfest_residual(*h, psi, *cs, m, 1e-3);
                const double ratio = r1 / r2;
                c.expect(std::abs(ratio - 4) <= 0.2, std::string("random state ") + std::to_string(trial) + " " + label +
                                                         " mode " + std::to_string(m + 1) +
                                                         fmt(": r(2e-3)/r(1e-3) = %.3f", ratio));
            }
        }
    }

    auto small = build_space({30, 30, 8});
    const cplx alpha = 3.0 * std::polar(1.0, M_PI / 4);
    const auto psi = coherent_product_state(small, {alpha, alpha, 0.0});
    const auto h2s = build_h_int2(*small, 1.0);
    const auto h1s = build_h_int1(*small, c1);
    for (std::size_t m = 0; m < 3; ++m) {
        const double r = ehrenfest_residual(h2s, psi, only_fwm, m, 1e-4);
        c.expect(r < 1e-6, "initial state, int2, mode " + std::to_string(m + 1) + fmt(": residual %.2e at dtau 1e-4", r));
        c.note("initial state, int1, mode " + std::to_string(m + 1) +
               fmt(": residual %.2e at dtau 1e-4", ehrenfest_residual(h1s, psi, c1, m, 1e-4)));
    }
    return c;
}

Check convergence(Runs& runs) {
    Check c;
    for (const std::string name : {"paper-s1", "paper-s2"}) {
        const auto& base = (name == "paper-s1" ? runs.s1() : runs.s2()).summary;
        const auto& big = runs.large(name).summary;
        c.note(name + fmt(": dimension %.0f -> %.0f", static_cast<double>(base.dimension), static_cast<double>(big.dimension)));
        std::vector<std::pair<std::string, std::pair<double, double>>> q;
        for (std::size_t j = 0; j < 3; ++j) {
            const std::string m = std::to_string(j + 1);
            q.push_back({"n" + m, {base.modes[j].n, big.modes[j].n}});
            q.push_back({"Var(x" + m + ")", {base.modes[j].quad.var_x, big.modes[j].quad.var_x}});
            q.push_back({"Var(p" + m + ")", {base.modes[j].quad.var_p, big.modes[j].quad.var_p}});
            q.push_back({"FF" + m, {ff(base.modes[j]), ff(big.modes[j])}});
        }
        q.push_back({"Schmidt number", {base.schmidt_number.value_or(NAN), big.schmidt_number.value_or(NAN)}});
        q.push_back({"tau*", {base.extremum.tau_n3_max.value_or(NAN), big.extremum.tau_n3_max.value_or(NAN)}});
        std::string worst_name;
        double worst = 0;
        bool finite = true;
        for (const auto& [label, v] : q) {
            const double r = std::abs(v.first - v.second) / std::abs(v.first);
            if (!std::isfinite(r)) finite = false;
            if (r > worst) {
                worst = r;
                worst_name = label;
            }
        }
        c.expect(finite && worst < 1e-4, name + fmt(": largest relative shift %.2e", worst) + " (" + worst_name + ")");
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    Runs runs;
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"first n3 maximum of S1 and S2 at tau* = 0.190 +- 0.001", [&] { return extremal_time(runs); }},
        {"S1 quadratures, Schmidt number, Fano factors and parity", [&] { return s1_values(runs); }},
        {"S2 photon numbers, quadratures, Schmidt number and Fano factors", [&] { return s2_values(runs); }},
        {"S1 and S2 photon statistics coincide", [&] { return picture_invariance(runs); }},
        {"S3 Fano factors, fidelity to the lossless mode 3 and odd parity", [&] { return dissipative(runs); }},
        {"conservation laws and norm on lossless runs", [&] { return conservation(runs); }},
        {"trajectory ensemble vs dense Lindblad, dense vs unitary", [] { return trajectories_vs_dense(); }},
        {"Wigner kernel, normalization and S1 mode 3 structure", [&] { return wigner_suite(runs); }},
        {"Ehrenfest residuals", [] { return ehrenfest(); }},
        {"truncation convergence at [31,31,42] cap 46", [&] { return convergence(runs); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id)) continue;
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        failed += !c.ok;
        std::printf("%s criterion %d: %s\n%s", c.ok ? "PASS" : "FAIL", id, criteria[i].first.c_str(), c.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed ? 1 : 0;
}

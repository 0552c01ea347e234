#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "fwmcat/errors.hpp"
#include "fwmcat/io.hpp"
#include "fwmcat/scenario.hpp"
#include "json.hpp"

using namespace fwmcat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
    return json::parse(R"({
      "hamiltonian": "int2",
      "couplings": {"g": 1.0, "g1": 0.5, "g2": 0.5, "g3": 0.5, "g12": 1.0, "g13": 1.0, "g23": 1.0,
                    "gamma1": 0.0, "gamma2": 0.0, "gamma3": 0.0},
      "alpha1": {"abs2": 1.0, "phase": 0.7853981634},
      "alpha2": {"abs2": 1.0, "phase": 0.7853981634},
      "truncation": {"max_occ": [9, 9, 12], "total_cap": 12},
      "tau_max": 1.2,
      "tau_step": 0.01,
      "solver": {"method": "auto"},
      "outputs": {"directory": "runs/small", "report_tau": null, "wigner_grid": "-6,6,61,-6,6,61"}
    })");
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("fwmcat_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FWMCAT_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = ScenarioConfig::parse(small_config().dump());
    CHECK(cfg.hamiltonian == HamiltonianKind::int2);
    CHECK(std::abs(cfg.alpha1 - std::polar(1.0, 0.7853981634)) < 1e-15);
    CHECK(cfg.total_cap == 12);
    CHECK_FALSE(cfg.report_tau.has_value());
    CHECK(cfg.wigner_grid.x_count == 61);

    auto bad = small_config();
    bad["couplings"]["g4"] = 1.0;
    CHECK_THROWS_WITH_AS(ScenarioConfig::parse(bad.dump()), doctest::Contains("g4"), ConfigError);
    bad = small_config();
    bad["hamiltonian"] = "int3";
    CHECK_THROWS_AS(ScenarioConfig::parse(bad.dump()), ConfigError);
    bad = small_config();
    bad["tau_step"] = -0.1;
    CHECK_THROWS_AS(ScenarioConfig::parse(bad.dump()), ConfigError);
    bad = small_config();
    bad["solver"]["method"] = "trajectories";
    CHECK_THROWS_AS(ScenarioConfig::parse(bad.dump()), ConfigError);
    bad = small_config();
    bad["outputs"]["artifacts"] = {"movies"};
    CHECK_THROWS_AS(ScenarioConfig::parse(bad.dump()), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::parse("{not json"), ConfigError);
    bad = small_config();
    bad["couplings"]["gamma2"] = -0.2;
    CHECK_THROWS_AS(ScenarioConfig::parse(bad.dump()), ConfigError);
}

TEST_CASE("config hash ignores the output directory only") {
    auto a = small_config();
    auto b = a;
    b["outputs"]["directory"] = "elsewhere";
    CHECK(ScenarioConfig::parse(a.dump()).hash() == ScenarioConfig::parse(b.dump()).hash());
    // Key order and whitespace do not matter.
    CHECK(ScenarioConfig::parse(a.dump(4)).hash() == ScenarioConfig::parse(a.dump()).hash());
    b["tau_max"] = 1.3;
    CHECK(ScenarioConfig::parse(a.dump()).hash() != ScenarioConfig::parse(b.dump()).hash());
    CHECK(ScenarioConfig::parse(a.dump()).hash().size() == 40);
}

TEST_CASE("small scenario run") {
    const auto dir = scratch("small");
    const auto cfg = ScenarioConfig::parse(small_config().dump());
    const auto res = run_scenario(cfg, dir / "a");
    const auto& s = res.summary;
    CHECK(s.solver == "unitary");
    CHECK(s.decoupling == "exact");
    CHECK(s.extremum.agree);
    CHECK(s.tau_report == doctest::Approx(res.tau[res.report_index]));
    REQUIRE(s.conservation_drift);
    for (double d : *s.conservation_drift) CHECK(d < 1e-6);
    CHECK(s.info.max_norm_drift < 1e-7);
    REQUIRE(s.schmidt_number);
    CHECK(*s.schmidt_number == doctest::Approx(1.0 / s.purity3).epsilon(1e-9));
    for (const char* f : {"summary.json", "timeseries.tsv", "distributions.tsv", "wigner_mode3_raw.tsv",
                          "wigner_mode1_transformed.tsv", "marginals_mode3_raw.tsv", "state_mode3.json",
                          "state_full.json"})
        CHECK(fs::exists(dir / "a" / f));

    // Byte-identical reruns.
    run_scenario(cfg, dir / "b");
    CHECK(read_text(dir / "a" / "summary.json") == read_text(dir / "b" / "summary.json"));
    CHECK(read_text(dir / "a" / "timeseries.tsv") == read_text(dir / "b" / "timeseries.tsv"));

    const auto cmp = compare_states(dir / "a", dir / "b");
    for (std::size_t j = 0; j < 3; ++j) {
        REQUIRE(cmp.fidelity[j]);
        CHECK(*cmp.fidelity[j] == doctest::Approx(1.0).epsilon(1e-9));
    }
    const auto summary = json::parse(read_text(dir / "a" / "summary.json"));
    CHECK(summary["config_hash"] == cfg.hash());
    CHECK(summary["modes"].size() == 3);

    // The first timeseries row reports FF3 of the vacuum as undefined.
    const auto ts = read_text(dir / "a" / "timeseries.tsv");
    CHECK(ts.find("undefined") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("zero couplings keep every observable constant") {
    auto j = small_config();
    for (auto& [k, v] : j["couplings"].items()) v = 0.0;
    j["hamiltonian"] = "int1";
    const auto res = simulate(ScenarioConfig::parse(j.dump()));
    for (const auto& m : res.moments) {
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(m[k].n - res.moments[0][k].n) < 1e-12);
    }
    CHECK_FALSE(res.summary.extremum.tau_n3_max);
    CHECK(res.report_index == res.tau.size() - 1);
    CHECK_THROWS_AS(scan_extremum(ScenarioConfig::parse(j.dump())), NumericalError);
}

TEST_CASE("solver selection") {
    auto j = small_config();
    j["couplings"]["gamma3"] = 0.1;
    j["truncation"] = json::parse(R"({"max_occ": [3, 3, 3], "total_cap": null})");
    j["alpha1"]["abs2"] = 0.1;
    j["alpha2"]["abs2"] = 0.1;
    j["tau_max"] = 0.2;
    j["tau_step"] = 0.05;
    auto res = simulate(ScenarioConfig::parse(j.dump()));
    CHECK(res.summary.solver == "dense");
    CHECK_FALSE(res.summary.schmidt_number);
    CHECK_FALSE(res.summary.conservation_drift);

    j["solver"] = json::parse(R"({"method": "trajectories", "n_traj": 20, "master_seed": 3, "workers": 2})");
    res = simulate(ScenarioConfig::parse(j.dump()));
    CHECK(res.summary.solver == "trajectories");
    REQUIRE(res.summary.modes[0].n_stderr);
    CHECK(res.summary.n_traj == 20);

    j["solver"] = json::parse(R"({"method": "dense"})");
    j["truncation"] = json::parse(R"({"max_occ": [12, 12, 12], "total_cap": null})");
    CHECK_THROWS_AS(simulate(ScenarioConfig::parse(j.dump())), ConfigError);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("exit");
    const auto good = dir / "good.json";
    write_text(good, small_config().dump());
    auto j = small_config();
    j["bogus"] = 1;
    const auto bad = dir / "bad.json";
    write_text(bad, j.dump());

    CHECK(run_cli("run --config " + good.string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "summary.json"));
    CHECK(run_cli("run --config " + bad.string() + " --out " + (dir / "x").string()) == 2);
    CHECK(run_cli("run --config " + (dir / "missing.json").string() + " --out " + (dir / "x").string()) == 2);
    CHECK(run_cli("scan --config " + good.string()) == 0);
    CHECK(run_cli("wigner --state " + (dir / "out" / "state_mode3.json").string() + " --mode 3 --grid -4,4,21,-4,4,21 --out " +
                  (dir / "w.tsv").string()) == 0);
    CHECK(fs::exists(dir / "w.tsv"));
    CHECK(run_cli("wigner --state " + (dir / "out" / "state_mode3.json").string() + " --mode 3 --grid 1,2") == 2);
    CHECK(run_cli("compare --a " + (dir / "out").string() + " --b " + (dir / "out").string()) == 0);
    CHECK(run_cli("frobnicate") == 2);

    // A monotone n3 series has no extremum: numerical failure.
    auto flat = small_config();
    for (auto& [k, v] : flat["couplings"].items()) v = 0.0;
    write_text(dir / "flat.json", flat.dump());
    CHECK(run_cli("scan --config " + (dir / "flat.json").string()) == 3);
    fs::remove_all(dir);
}

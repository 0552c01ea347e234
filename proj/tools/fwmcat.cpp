#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "fwmcat/errors.hpp"
#include "fwmcat/io.hpp"
#include "fwmcat/scenario.hpp"
#include "fwmcat/wigner.hpp"
#include "json.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, numerical_error = 3 };

void print_run(const fwmcat::ScenarioResult& res, const std::string& out) {
    const auto& s = res.summary;
    std::cout << "solver " << s.solver << ", dimension " << s.dimension << "\n"
              << "tau* " << (s.extremum.tau_n3_max ? fwmcat::format_g9(*s.extremum.tau_n3_max) : std::string("none")) << ", report tau "
              << fwmcat::format_g9(s.tau_report) << "\n";
    for (std::size_t j = 0; j < 3; ++j) {
        const auto& m = s.modes[j];
        std::cout << "mode " << j + 1 << ": n " << fwmcat::format_g9(m.n) << "  var_x " << fwmcat::format_g9(m.quad.var_x)
                  << "  var_p " << fwmcat::format_g9(m.quad.var_p) << "  FF "
                  << (m.fano ? fwmcat::format_g9(*m.fano) : "undefined") << "\n";
    }
    if (s.schmidt_number) std::cout << "K " << fwmcat::format_g9(*s.schmidt_number) << "\n";
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-mode four-wave-mixing cavity simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trajectories;
    auto* run = app.add_subcommand("run", "Evolve a scenario and write its artifacts");
    run->add_option("--config", config_path, "Scenario JSON")->required();
    run->add_option("--out", out_dir, "Output directory (default: outputs.directory)");
    run->add_option("--seed", seed, "Override solver.master_seed");
    run->add_option("--trajectories", trajectories, "Override solver.n_traj");

    std::string scan_config;
    auto* scan = app.add_subcommand("scan", "Locate the first n3 maximum and n1 minimum");
    scan->add_option("--config", scan_config, "Scenario JSON")->required();

    std::string state_path, grid_text = "-8,8,201,-8,8,201", wigner_out;
    std::size_t mode = 1;
    auto* wig = app.add_subcommand("wigner", "Wigner grid of one mode of a saved state");
    wig->add_option("--state", state_path, "State file")->required();
    wig->add_option("--mode", mode, "Mode 1, 2 or 3")->required()->check(CLI::Range(1, 3));
    wig->add_option("--grid", grid_text, "xmin,xmax,nx,pmin,pmax,np");
    wig->add_option("--out", wigner_out, "Output file (default: stdout)");

    std::string dir_a, dir_b;
    auto* cmp = app.add_subcommand("compare", "Mode-wise fidelities between two runs");
    cmp->add_option("--a", dir_a, "First run directory")->required();
    cmp->add_option("--b", dir_b, "Second run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*run) {
            auto cfg = fwmcat::ScenarioConfig::load(config_path);
            if (seed) cfg.master_seed = *seed;
            if (trajectories) {
                if (*trajectories < 1) throw fwmcat::ConfigError("--trajectories must be >= 1");
                cfg.n_traj = *trajectories;
            }
            if (out_dir.empty()) out_dir = cfg.directory;
            if (out_dir.empty()) throw fwmcat::ConfigError("no output directory: pass --out or set outputs.directory");
            const auto res = fwmcat::run_scenario(cfg, out_dir);
            print_run(res, out_dir);
        } else if (*scan) {
            const auto rec = fwmcat::scan_extremum(fwmcat::ScenarioConfig::load(scan_config));
            nlohmann::json doc{{"tau_n3_max", *rec.tau_n3_max},
                               {"tau_n1_min", rec.tau_n1_min ? nlohmann::json(*rec.tau_n1_min) : nlohmann::json(nullptr)},
                               {"grid_step", rec.grid_step},
                               {"agree", rec.agree}};
            std::cout << doc.dump(2) << "\n";
        } else if (*wig) {
            const auto spec = fwmcat::parse_grid_spec(grid_text);
            const auto file = fwmcat::read_state(state_path);
            const auto rho = fwmcat::single_mode_from(file, mode - 1);
            const auto grid = fwmcat::wigner(rho.matrix, spec, "mode " + std::to_string(mode) + " " + file.meta.picture);
            const std::vector<std::string> header{"config_hash " + file.meta.config_hash,
                                                  "tau " + fwmcat::format_g9(file.meta.tau)};
            if (wigner_out.empty()) {
                std::cout << fwmcat::format_wigner_grid(grid, header);
            } else {
                fwmcat::write_wigner_grid(wigner_out, grid, header);
            }
            if (!grid.warning.empty()) std::cerr << "warning: " << grid.warning << "\n";
        } else if (*cmp) {
            std::cout << fwmcat::compare_states(dir_a, dir_b).to_json();
        }
    } catch (const fwmcat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const fwmcat::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    } catch (const fwmcat::UndefinedError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    }
    return ok;
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trapmorph/trapmorph.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericError = 3;

trapmorph::Scenario load_scenario(const std::string& arg) {
    namespace fs = std::filesystem;
    if (fs::exists(arg)) {
        std::ifstream in(arg);
        if (!in) throw trapmorph::ConfigError("cannot read config file: " + arg);
        std::stringstream ss;
        ss << in.rdbuf();
        return trapmorph::parse_scenario_config(ss.str());
    }
    for (const auto& b : trapmorph::list_builtin_scenarios())
        if (b.name == arg) return trapmorph::builtin_scenario(arg);
    throw trapmorph::ConfigError("'" + arg + "' is neither a config file nor a builtin scenario "
                                 "(see `trapmorph builtins`)");
}

std::string default_out_dir() {
    if (const char* env = std::getenv("TRAPMORPH_OUT")) return env;
    return "";
}

void apply_overrides(trapmorph::Scenario& sc, int grid_n, double dt) {
    if (grid_n > 0) sc.grid.n_points = grid_n;
    if (dt > 0.0) sc.dt = dt;
    trapmorph::validate(sc);
}

void print_error(const char* category, const std::exception& e) {
    nlohmann::json j;
    j["error"] = category;
    j["message"] = e.what();
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"design and verify trap-deformation protocols for a 1D quantum particle"};
    app.require_subcommand(1);

    std::string scenario_arg;
    std::string out_dir = default_out_dir();
    int workers = 0;
    int grid_n = 0;
    double dt = 0.0;
    std::vector<double> c_values;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory (default: scenario's own, or $TRAPMORPH_OUT)");
        cmd->add_option("--workers", workers, "worker thread count (0 = hardware)");
        cmd->add_option("--grid-n", grid_n, "override grid n_points");
        cmd->add_option("--dt", dt, "override propagation time step");
    };

    CLI::App* run = app.add_subcommand("run", "design, propagate and report one scenario");
    run->add_option("config", scenario_arg, "config file path or builtin name")->required();
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "fidelity versus truncation level for one scenario");
    sweep->add_option("config", scenario_arg, "config file path or builtin name")->required();
    sweep->add_option("--c", c_values, "ascending truncation levels")->required()->delimiter(',');
    add_common(sweep);

    CLI::App* builtins = app.add_subcommand("builtins", "list builtin scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (builtins->parsed()) {
            for (const auto& b : trapmorph::list_builtin_scenarios())
                std::cout << b.name << "\t" << b.description << '\n';
            return 0;
        }
        trapmorph::Scenario sc = load_scenario(scenario_arg);
        apply_overrides(sc, grid_n, dt);
        trapmorph::RunOptions options;
        options.out_dir = out_dir;
        options.workers = workers;
        if (run->parsed()) {
            const trapmorph::RunSummary sum = trapmorph::run_scenario(sc, options);
            std::cout << trapmorph::to_json(sum).dump(2) << '\n';
            return 0;
        }
        const auto rows = trapmorph::sweep_truncation(sc, c_values, options);
        std::cout << "c,fidelity\n";
        bool any_failed = false;
        for (const auto& row : rows) {
            if (row.ok)
                std::cout << row.c << ',' << row.fidelity << '\n';
            else {
                any_failed = true;
                std::cerr << "c = " << row.c << " failed: " << row.error << '\n';
            }
        }
        return any_failed ? kExitNumericError : 0;
    } catch (const trapmorph::ConfigError& e) {
        print_error("config", e);
        return kExitConfigError;
    } catch (const trapmorph::Error& e) {
        print_error("numeric", e);
        return kExitNumericError;
    } catch (const std::exception& e) {
        print_error("internal", e);
        return 1;
    }
}

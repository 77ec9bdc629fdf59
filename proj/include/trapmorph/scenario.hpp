#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trapmorph/designer.hpp"
#include "trapmorph/schedule.hpp"
#include "trapmorph/traps.hpp"

namespace trapmorph {

/// Declarative endpoint description: a trap kind plus the quantum number of
/// the stationary state to use, or a lattice target specification.
struct EndpointSpec {
    enum class Kind { harmonic, linear, lattice, tabulated } kind = Kind::harmonic;
    double omega = 1.0;                  // harmonic
    double slope = 1.0;                  // linear
    std::vector<double> centers;         // lattice
    double omega_site = 1.0;             // lattice
    std::vector<double> weights;         // lattice
    std::vector<double> tabulated;       // tabulated potential samples (grid-sized)
    int n = 0;                           // quantum number (harmonic/linear/tabulated)
};

struct GridParams {
    double x_min = -12.0;
    double x_max = 12.0;
    int n_points = 1024;
};

struct Scenario {
    std::string name = "scenario";
    EndpointSpec initial;
    EndpointSpec final;
    double t_f = 0.0;
    InterpolationMode interpolation = InterpolationMode::positive_modulus;
    Phi0Convention phi0 = Phi0Convention::polynomial;
    GridParams grid;
    int n_t = 2000;
    double dt = 1e-3;
    std::optional<double> truncation_c;
    int snapshot_count = 9;
    std::string out_dir;
};

inline void validate(const Scenario& sc) {
    if (!(sc.t_f > 0.0)) throw ConfigError("scenario: t_f must be > 0");
    if (sc.n_t < 2) throw ConfigError("scenario: n_t must be >= 2");
    if (!(sc.dt > 0.0)) throw ConfigError("scenario: dt must be > 0");
    if (sc.dt > sc.t_f / 1000.0 * (1.0 + 1e-12))
        throw ConfigError("scenario: dt must be <= t_f/1000 for designed protocols");
    if (sc.truncation_c && !(*sc.truncation_c > 0.0))
        throw ConfigError("scenario: truncation_c must be > 0");
    if (sc.snapshot_count < 2) throw ConfigError("scenario: snapshots must be >= 2");
    Grid g(sc.grid.x_min, sc.grid.x_max, sc.grid.n_points, /*require_power_of_two=*/true);
    if (!g.contains_origin()) throw ConfigError("scenario: grid must contain x = 0");
    auto check_endpoint = [](const EndpointSpec& e, const char* which) {
        if (e.n < 0) throw ConfigError(std::string("scenario: ") + which + ".n must be >= 0");
        switch (e.kind) {
            case EndpointSpec::Kind::harmonic:
                if (!(e.omega > 0.0)) throw ConfigError(std::string(which) + ": omega must be > 0");
                break;
            case EndpointSpec::Kind::linear:
                if (!(e.slope > 0.0)) throw ConfigError(std::string(which) + ": slope must be > 0");
                break;
            case EndpointSpec::Kind::lattice: {
                LatticeTrap lat{e.centers, e.omega_site, e.weights};
                validate(TrapPotential{lat});
                break;
            }
            case EndpointSpec::Kind::tabulated:
                if (e.tabulated.empty()) throw ConfigError(std::string(which) + ": tabulated values missing");
                break;
        }
    };
    check_endpoint(sc.initial, "initial");
    check_endpoint(sc.final, "final");
    if (sc.initial.kind == EndpointSpec::Kind::lattice)
        throw ConfigError("scenario: lattice endpoints are supported as targets (final) only");
}

struct PreparedEndpoint {
    Eigenstate state;
    RealField potential;  // the trap sampled on the grid (effective potential for lattices)
    std::vector<std::string> warnings;
};

inline PreparedEndpoint prepare_endpoint(const EndpointSpec& e, const Grid& grid) {
    PreparedEndpoint out{Eigenstate{}, RealField(grid), {}};
    switch (e.kind) {
        case EndpointSpec::Kind::harmonic: {
            out.state = harmonic_eigenstate(e.omega, e.n, grid);
            out.potential = sample(out.state.trap, grid);
            break;
        }
        case EndpointSpec::Kind::linear: {
            TrapPotential trap = LinearTrap{e.slope};
            auto solved = solve_stationary(trap, e.n + 1, grid);
            if (solved.edge_leakage)
                out.warnings.push_back("eigensolver: state has residual amplitude at the grid edges");
            out.state = std::move(solved.states[e.n]);
            out.potential = sample(trap, grid);
            break;
        }
        case EndpointSpec::Kind::tabulated: {
            if (static_cast<int>(e.tabulated.size()) != grid.n_points)
                throw ConfigError("tabulated trap needs exactly n_points values");
            TrapPotential trap = TabulatedTrap{RealField(grid, e.tabulated)};
            auto solved = solve_stationary(trap, e.n + 1, grid);
            if (solved.edge_leakage)
                out.warnings.push_back("eigensolver: state has residual amplitude at the grid edges");
            out.state = std::move(solved.states[e.n]);
            out.potential = sample(trap, grid);
            break;
        }
        case EndpointSpec::Kind::lattice: {
            auto target = lattice_target(e.centers, e.omega_site, e.weights, grid);
            if (target.overlap_warning) {
                std::ostringstream msg;
                msg << "lattice target: adjacent sites overlap (max " << target.max_adjacent_overlap
                    << "); the superposition is not a set of independent ground states";
                out.warnings.push_back(msg.str());
            }
            out.state = std::move(target.state);
            out.potential = sample(out.state.trap, grid);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Builtin scenarios
// ---------------------------------------------------------------------------

struct BuiltinInfo {
    std::string name;
    std::string description;
};

inline std::vector<BuiltinInfo> list_builtin_scenarios() {
    return {
        {"expansion", "harmonic trap opening, omega 1 -> 1/3, ground state, t_f = 0.48 pi"},
        {"harmonic-to-linear", "harmonic trap (omega 1) to linear trap 3|x|/2, ground state, t_f = 0.48 pi"},
        {"split-5", "ground state split into five lattice sites (spacing 3/4, omega_site 64), t_f = 10 pi"},
        {"excited-to-excited", "first excited state, omega 1 -> 1/3, signed amplitude, t_f = 0.96 pi"},
        {"ground-to-excited", "ground to first excited state of one trap, signed amplitude, t_f = 8 pi, c = 8"},
    };
}

inline Scenario builtin_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "expansion") {
        sc.initial = {EndpointSpec::Kind::harmonic, 1.0, 1.0, {}, 1.0, {}, {}, 0};
        sc.final = sc.initial;
        sc.final.omega = 1.0 / 3.0;
        sc.t_f = 0.24 * 2.0 * M_PI;
        sc.interpolation = InterpolationMode::positive_modulus;
    } else if (name == "harmonic-to-linear") {
        sc.initial = {EndpointSpec::Kind::harmonic, 1.0, 1.0, {}, 1.0, {}, {}, 0};
        sc.final.kind = EndpointSpec::Kind::linear;
        sc.final.slope = 1.5;
        sc.final.n = 0;
        sc.t_f = 0.24 * 2.0 * M_PI;
        sc.interpolation = InterpolationMode::positive_modulus;
    } else if (name == "split-5") {
        sc.initial = {EndpointSpec::Kind::harmonic, 1.0, 1.0, {}, 1.0, {}, {}, 0};
        sc.final.kind = EndpointSpec::Kind::lattice;
        sc.final.centers = {-1.5, -0.75, 0.0, 0.75, 1.5};
        sc.final.omega_site = 64.0;
        sc.final.weights = {1.0, 1.0, 1.0, 1.0, 1.0};
        sc.t_f = 10.0 * M_PI;
        sc.interpolation = InterpolationMode::positive_modulus;
    } else if (name == "excited-to-excited") {
        sc.initial = {EndpointSpec::Kind::harmonic, 1.0, 1.0, {}, 1.0, {}, {}, 1};
        sc.final = sc.initial;
        sc.final.omega = 1.0 / 3.0;
        sc.t_f = 0.48 * 2.0 * M_PI;
        sc.interpolation = InterpolationMode::signed_amplitude;
    } else if (name == "ground-to-excited") {
        sc.initial = {EndpointSpec::Kind::harmonic, 1.0, 1.0, {}, 1.0, {}, {}, 0};
        sc.final = sc.initial;
        sc.final.n = 1;
        sc.t_f = 8.0 * M_PI;
        sc.interpolation = InterpolationMode::signed_amplitude;
        sc.truncation_c = 8.0;
    } else {
        throw ConfigError("unknown builtin scenario: " + name);
    }
    sc.out_dir = "out/" + name;
    return sc;
}

// ---------------------------------------------------------------------------
// Config file parsing (flat key = value lines grouped in [sections])
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse number for '" + key + "': '" + v + "'");
    }
}

inline int parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse integer for '" + key + "': '" + v + "'");
    }
}

inline std::vector<double> parse_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, key));
    }
    if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

inline void parse_endpoint(EndpointSpec& e, const std::string& key, const std::string& value,
                           const std::string& section) {
    if (key == "trap") {
        if (value == "harmonic")
            e.kind = EndpointSpec::Kind::harmonic;
        else if (value == "linear")
            e.kind = EndpointSpec::Kind::linear;
        else if (value == "lattice")
            e.kind = EndpointSpec::Kind::lattice;
        else
            throw ConfigError("config: unknown trap kind '" + value + "' in [" + section + "]");
    } else if (key == "omega") {
        e.omega = parse_double(value, key);
    } else if (key == "slope") {
        e.slope = parse_double(value, key);
    } else if (key == "n") {
        e.n = parse_int(value, key);
    } else if (key == "centers") {
        e.centers = parse_list(value, key);
    } else if (key == "omega_site") {
        e.omega_site = parse_double(value, key);
    } else if (key == "weights") {
        e.weights = parse_list(value, key);
    } else {
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    }
}

}  // namespace detail

/// Parse a scenario configuration. Unknown keys are rejected; required fields
/// (t_f) must be present. The optional `units` header line is verified to
/// declare the dimensionless convention.
inline Scenario parse_scenario_config(const std::string& text) {
    Scenario sc;
    bool have_tf = false;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config: malformed section header: " + line);
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        if (section.empty() && line.rfind("units", 0) == 0) {
            if (line.find("hbar=1") == std::string::npos || line.find("m=1") == std::string::npos)
                throw ConfigError("config: units line must declare hbar=1 m=1");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: expected 'key = value': " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section == "scenario") {
            if (key == "name")
                sc.name = value;
            else if (key == "t_f") {
                sc.t_f = detail::parse_double(value, key);
                have_tf = true;
            } else if (key == "interpolation") {
                if (value == "positive")
                    sc.interpolation = InterpolationMode::positive_modulus;
                else if (value == "signed")
                    sc.interpolation = InterpolationMode::signed_amplitude;
                else
                    throw ConfigError("config: interpolation must be 'positive' or 'signed'");
            } else if (key == "n_t")
                sc.n_t = detail::parse_int(value, key);
            else if (key == "truncation_c")
                sc.truncation_c = detail::parse_double(value, key);
            else if (key == "phi0") {
                if (value == "polynomial")
                    sc.phi0 = Phi0Convention::polynomial;
                else if (value == "zero")
                    sc.phi0 = Phi0Convention::zero;
                else
                    throw ConfigError("config: phi0 must be 'polynomial' or 'zero'");
            } else
                throw ConfigError("config: unknown key '" + key + "' in [scenario]");
        } else if (section == "initial") {
            detail::parse_endpoint(sc.initial, key, value, section);
        } else if (section == "final") {
            detail::parse_endpoint(sc.final, key, value, section);
        } else if (section == "grid") {
            if (key == "x_min")
                sc.grid.x_min = detail::parse_double(value, key);
            else if (key == "x_max")
                sc.grid.x_max = detail::parse_double(value, key);
            else if (key == "n_points")
                sc.grid.n_points = detail::parse_int(value, key);
            else
                throw ConfigError("config: unknown key '" + key + "' in [grid]");
        } else if (section == "propagation") {
            if (key == "dt")
                sc.dt = detail::parse_double(value, key);
            else if (key == "snapshots")
                sc.snapshot_count = detail::parse_int(value, key);
            else
                throw ConfigError("config: unknown key '" + key + "' in [propagation]");
        } else if (section == "outputs") {
            if (key == "dir")
                sc.out_dir = value;
            else
                throw ConfigError("config: unknown key '" + key + "' in [outputs]");
        } else {
            throw ConfigError("config: key '" + key + "' outside any known section");
        }
    }
    if (!have_tf) throw ConfigError("config: required key t_f missing in [scenario]");
    if (sc.out_dir.empty()) sc.out_dir = "out/" + sc.name;
    validate(sc);
    return sc;
}

}  // namespace trapmorph

#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapmorph/propagator.hpp"
#include "trapmorph/scenario.hpp"

namespace trapmorph {

struct RunSummary {
    std::string scenario;
    double t_f = 0.0;
    double dt = 0.0;
    int n_t = 0;
    GridParams grid;
    std::optional<double> truncation_c;
    double fidelity = 0.0;
    double norm_drift = 0.0;
    double final_norm = 0.0;
    double continuity_residual_max = 0.0;
    double continuity_residual_stencil_max = 0.0;
    double boundary_deviation_initial = 0.0;
    double boundary_deviation_final = 0.0;
    double clamped_fraction_max = 0.0;         // truncation clamp, max over slices
    double window_clamped_fraction_max = 0.0;  // outside-trust-window fraction, max over slices
    double edge_density_max = 0.0;
    double S_overlap = 0.0;
    double wall_time_ms = 0.0;
    std::vector<std::string> warnings;
};

inline nlohmann::json to_json(const RunSummary& s) {
    nlohmann::json j;
    j["scenario"] = s.scenario;
    j["t_f"] = s.t_f;
    j["dt"] = s.dt;
    j["n_t"] = s.n_t;
    j["grid"] = {{"x_min", s.grid.x_min}, {"x_max", s.grid.x_max}, {"n_points", s.grid.n_points}};
    if (s.truncation_c)
        j["truncation_c"] = *s.truncation_c;
    else
        j["truncation_c"] = nullptr;
    j["fidelity"] = s.fidelity;
    j["norm_drift"] = s.norm_drift;
    j["final_norm"] = s.final_norm;
    j["continuity_residual_max"] = s.continuity_residual_max;
    j["continuity_residual_stencil_max"] = s.continuity_residual_stencil_max;
    j["boundary_deviation_initial"] = s.boundary_deviation_initial;
    j["boundary_deviation_final"] = s.boundary_deviation_final;
    j["clamped_fraction_max"] = s.clamped_fraction_max;
    j["window_clamped_fraction_max"] = s.window_clamped_fraction_max;
    j["edge_density_max"] = s.edge_density_max;
    j["S_overlap"] = s.S_overlap;
    j["wall_time_ms"] = s.wall_time_ms;
    j["warnings"] = s.warnings;
    return j;
}

struct RunOptions {
    std::string out_dir;  // overrides the scenario's own choice when non-empty
    int workers = 0;
    bool write_outputs = true;
};

namespace detail {

inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Snapshot CSV: header then rows `t,x,value` in row-major time order.
inline void write_field_csv(const std::filesystem::path& path, const std::vector<double>& times,
                            const std::vector<const RealField*>& fields) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path.string());
    out << "t,x,value\n";
    for (std::size_t s = 0; s < fields.size(); ++s) {
        const RealField& f = *fields[s];
        for (int j = 0; j < f.size(); ++j)
            out << fmt17(times[s]) << ',' << fmt17(f.grid.x(j)) << ',' << fmt17(f[j]) << '\n';
    }
}

inline std::vector<int> snapshot_slice_indices(int n_t, int count) {
    std::vector<int> idx;
    for (int s = 0; s < count; ++s)
        idx.push_back(static_cast<int>(std::lround(static_cast<double>(s) * (n_t - 1) / (count - 1))));
    return idx;
}

struct PreparedScenario {
    Grid grid;
    PreparedEndpoint initial;
    PreparedEndpoint final;
    Schedule schedule;
    DesignInput design_input;
};

inline PreparedScenario prepare(const Scenario& sc, int workers) {
    validate(sc);
    Grid grid(sc.grid.x_min, sc.grid.x_max, sc.grid.n_points, /*require_power_of_two=*/true);
    PreparedEndpoint initial = prepare_endpoint(sc.initial, grid);
    PreparedEndpoint final = prepare_endpoint(sc.final, grid);
    StatePair pair = make_state_pair(initial.state, final.state, sc.interpolation);
    Schedule schedule = Schedule::quintic(sc.t_f, pair.E_i, pair.E_f, sc.phi0);
    DesignInput din{grid, pair, schedule, sc.n_t, sc.truncation_c,
                    TrustWindowParams{}, initial.potential, final.potential, workers};
    return PreparedScenario{grid, std::move(initial), std::move(final), std::move(schedule), std::move(din)};
}

}  // namespace detail

/// Design, truncate, propagate and measure one scenario. Writes the snapshot
/// CSVs and the JSON summary unless options.write_outputs is false.
inline RunSummary run_scenario(const Scenario& sc, const RunOptions& options = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::PreparedScenario prep = detail::prepare(sc, options.workers);

    DesignedProtocol protocol = design(prep.design_input);

    PropagationConfig pcfg;
    pcfg.dt = sc.dt;
    pcfg.potential = MoviePotential{&protocol, true};
    pcfg.snapshot_count = sc.snapshot_count;
    pcfg.fidelity_target = ComplexWave::from_real(prep.final.state.wave);
    EvolutionResult evo = propagate(ComplexWave::from_real(prep.initial.state.wave), pcfg, sc.t_f);

    RunSummary sum;
    sum.scenario = sc.name;
    sum.t_f = sc.t_f;
    sum.dt = sc.dt;
    sum.n_t = sc.n_t;
    sum.grid = sc.grid;
    sum.truncation_c = sc.truncation_c;
    sum.fidelity = evo.fidelity.value_or(0.0);
    sum.norm_drift = evo.norm_drift;
    sum.final_norm = norm(evo.final_wave);
    for (int k = 0; k < protocol.n_slices(); ++k) {
        sum.continuity_residual_max =
            std::max(sum.continuity_residual_max, protocol.diag.continuity_residual[k]);
        sum.continuity_residual_stencil_max =
            std::max(sum.continuity_residual_stencil_max, protocol.diag.continuity_residual_stencil[k]);
        sum.clamped_fraction_max = std::max(sum.clamped_fraction_max, protocol.diag.truncated_fraction[k]);
        sum.window_clamped_fraction_max =
            std::max(sum.window_clamped_fraction_max, protocol.diag.window_clamped_fraction[k]);
    }
    sum.boundary_deviation_initial = protocol.diag.boundary_deviation_initial;
    sum.boundary_deviation_final = protocol.diag.boundary_deviation_final;
    sum.edge_density_max = evo.edge_density_max;
    sum.S_overlap = protocol.S_overlap;
    sum.warnings = prep.initial.warnings;
    sum.warnings.insert(sum.warnings.end(), prep.final.warnings.begin(), prep.final.warnings.end());
    if (evo.edge_density_max > 1e-10)
        sum.warnings.push_back("propagation: wave density at the grid edges exceeded 1e-10");

    if (options.write_outputs) {
        namespace fs = std::filesystem;
        const fs::path dir = options.out_dir.empty() ? fs::path(sc.out_dir) : fs::path(options.out_dir);
        fs::create_directories(dir);

        const auto idx = detail::snapshot_slice_indices(protocol.n_slices(), sc.snapshot_count);
        std::vector<double> slice_times;
        std::vector<const RealField*> v_fields, vt_fields, rho_fields;
        for (int k : idx) {
            slice_times.push_back(protocol.times[k]);
            v_fields.push_back(&protocol.V[k]);
            if (protocol.V_truncated) vt_fields.push_back(&(*protocol.V_truncated)[k]);
            rho_fields.push_back(&protocol.rho[k]);
        }
        detail::write_field_csv(dir / "potential.csv", slice_times, v_fields);
        if (protocol.V_truncated)
            detail::write_field_csv(dir / "potential_truncated.csv", slice_times, vt_fields);
        detail::write_field_csv(dir / "rho.csv", slice_times, rho_fields);

        std::vector<double> wave_times;
        std::vector<RealField> abs2, re, im;
        for (const auto& [t, w] : evo.snapshots) {
            wave_times.push_back(t);
            RealField a(prep.grid), r(prep.grid), i(prep.grid);
            for (int j = 0; j < prep.grid.n_points; ++j) {
                a[j] = std::norm(w.values[j]);
                r[j] = w.values[j].real();
                i[j] = w.values[j].imag();
            }
            abs2.push_back(std::move(a));
            re.push_back(std::move(r));
            im.push_back(std::move(i));
        }
        auto ptrs = [](const std::vector<RealField>& v) {
            std::vector<const RealField*> p;
            for (const auto& f : v) p.push_back(&f);
            return p;
        };
        detail::write_field_csv(dir / "psi_abs2.csv", wave_times, ptrs(abs2));
        detail::write_field_csv(dir / "psi_re.csv", wave_times, ptrs(re));
        detail::write_field_csv(dir / "psi_im.csv", wave_times, ptrs(im));

        sum.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        std::ofstream js(dir / "summary.json");
        if (!js) throw ConfigError("cannot open output file: " + (dir / "summary.json").string());
        js << to_json(sum).dump(2) << '\n';
    } else {
        sum.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return sum;
}

struct SweepRow {
    double c = 0.0;
    double fidelity = 0.0;
    bool ok = false;
    std::string error;
};

/// Re-truncate and re-propagate one designed protocol for each clamp level.
/// Per-point numeric failures are recorded and the sweep continues.
inline std::vector<SweepRow> sweep_truncation(const Scenario& sc, const std::vector<double>& c_values,
                                              const RunOptions& options = {}) {
    for (std::size_t i = 0; i < c_values.size(); ++i) {
        if (!(c_values[i] > 0.0)) throw ConfigError("sweep: c values must be > 0");
        if (i > 0 && !(c_values[i] > c_values[i - 1]))
            throw ConfigError("sweep: c values must be ascending");
    }
    detail::PreparedScenario prep = detail::prepare(sc, options.workers);
    DesignInput din = prep.design_input;
    din.truncation_c.reset();  // one untruncated design serves every c
    DesignedProtocol protocol = design(din);

    const ComplexWave psi0 = ComplexWave::from_real(prep.initial.state.wave);
    const ComplexWave target = ComplexWave::from_real(prep.final.state.wave);

    auto run_point = [&](double c) -> SweepRow {
        SweepRow row{c, 0.0, false, {}};
        try {
            DesignedProtocol trunc = protocol;  // shares nothing mutable; V_truncated filled below
            trunc.c = c;
            trunc.V_truncated = std::vector<RealField>();
            trunc.V_truncated->reserve(protocol.n_slices());
            for (const auto& v : protocol.V) trunc.V_truncated->push_back(truncate_potential(v, c));
            PropagationConfig pcfg;
            pcfg.dt = sc.dt;
            pcfg.potential = MoviePotential{&trunc, true};
            pcfg.fidelity_target = target;
            EvolutionResult evo = propagate(psi0, pcfg, sc.t_f);
            row.fidelity = evo.fidelity.value_or(0.0);
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        return row;
    };

    std::vector<SweepRow> rows(c_values.size());
    int workers = options.workers > 0
                      ? options.workers
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min<int>(workers, static_cast<int>(c_values.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < c_values.size(); ++i) rows[i] = run_point(c_values[i]);
    } else {
        std::vector<std::future<void>> futs;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < workers; ++w)
            futs.push_back(std::async(std::launch::async, [&]() {
                for (std::size_t i = next.fetch_add(1); i < c_values.size(); i = next.fetch_add(1))
                    rows[i] = run_point(c_values[i]);
            }));
        for (auto& f : futs) f.get();
    }

    if (options.write_outputs) {
        namespace fs = std::filesystem;
        const fs::path dir = options.out_dir.empty() ? fs::path(sc.out_dir) : fs::path(options.out_dir);
        fs::create_directories(dir);
        std::ofstream out(dir / "truncation_sweep.csv");
        if (!out) throw ConfigError("cannot open output file: " + (dir / "truncation_sweep.csv").string());
        out << "c,fidelity\n";
        for (const auto& row : rows)
            if (row.ok) out << detail::fmt17(row.c) << ',' << detail::fmt17(row.fidelity) << '\n';
    }
    return rows;
}

}  // namespace trapmorph

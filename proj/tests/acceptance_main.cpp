// Acceptance suite: runs every protocol of the library at production
// parameters and checks the published targets plus the property battery.
// One pass/fail line per criterion; exit status = number of failures.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "trapmorph/trapmorph.hpp"

using namespace trapmorph;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

struct ProtocolRun {
    DesignedProtocol protocol;
    EvolutionResult evolution;
    PreparedEndpoint initial;
    PreparedEndpoint final;
    Scenario scenario;
};

ProtocolRun run_builtin(const std::string& name) {
    const Scenario sc = builtin_scenario(name);
    const Grid grid(sc.grid.x_min, sc.grid.x_max, sc.grid.n_points, true);
    PreparedEndpoint initial = prepare_endpoint(sc.initial, grid);
    PreparedEndpoint final = prepare_endpoint(sc.final, grid);
    const StatePair pair = make_state_pair(initial.state, final.state, sc.interpolation);
    const Schedule schedule = Schedule::quintic(sc.t_f, pair.E_i, pair.E_f, sc.phi0);
    DesignInput din{grid, pair, schedule, sc.n_t, sc.truncation_c,
                    TrustWindowParams{}, initial.potential, final.potential, 0};
    DesignedProtocol protocol = design(din);
    PropagationConfig cfg;
    cfg.dt = sc.dt;
    cfg.potential = MoviePotential{&protocol, true};
    cfg.fidelity_target = ComplexWave::from_real(final.state.wave);
    EvolutionResult evo = propagate(ComplexWave::from_real(initial.state.wave), cfg, sc.t_f);
    return ProtocolRun{std::move(protocol), std::move(evo), std::move(initial), std::move(final), sc};
}

double residual_max(const DesignedProtocol& p) {
    double r = 0.0;
    for (double v : p.diag.continuity_residual) r = std::max(r, v);
    return r;
}

double parity_deviation(const DesignedProtocol& p) {
    double dev = 0.0;
    const int n = p.grid.n_points;
    for (int k = 0; k < p.n_slices(); ++k) {
        const TrustWindow w = build_trust_window(p.rho[k], TrustWindowParams{});
        for (int j = 0; j < n; ++j) {
            const int jm = n - 1 - j;
            if (w.in(j) && w.in(jm)) dev = std::max(dev, std::abs(p.V[k][j] - p.V[k][jm]));
        }
    }
    return dev;
}

}  // namespace

int main() {
    const auto wall0 = std::chrono::steady_clock::now();

    // ---------------------------------------------------------------- 1 & 2
    {
        const Scenario sc = builtin_scenario("ground-to-excited");
        const std::vector<double> cs{0.5, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0};
        RunOptions opt;
        opt.write_outputs = false;
        const auto t0 = std::chrono::steady_clock::now();
        const auto rows = sweep_truncation(sc, cs, opt);
        const double sweep_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        double f_half = 0.0, f8 = 0.0;
        bool all_ok = true;
        for (const auto& row : rows) {
            all_ok = all_ok && row.ok;
            if (row.c == 0.5) f_half = row.fidelity;
            if (row.c == 8.0) f8 = row.fidelity;
        }
        report("criterion 1: node-creation fidelity at c = 8",
               all_ok && std::abs(f8 - 0.9996) <= 0.0015,
               fmt("F = %.5f (target 0.9996 +- 0.0015; t_f = 8 pi, n = 1024, n_t = 2000, dt = 1e-3)", f8));

        bool plateau = true;
        double prev = 0.0;
        std::string curve;
        for (const auto& row : rows) {
            if (row.c >= 8.0) {
                if (prev > 0.0 && row.fidelity < prev - 1e-3) plateau = false;
                prev = row.fidelity;
            }
            curve += fmt("F(%g)=%.4f ", row.c, row.fidelity);
        }
        report("criterion 2: truncation plateau",
               plateau && f_half < 0.9 && sweep_seconds < 60.0,
               fmt("%s| sweep of %zu values in %.1f s", curve.c_str(), cs.size(), sweep_seconds));
    }

    // ------------------------------------------------------------------- 3
    {
        const ProtocolRun run = run_builtin("expansion");
        const double F = run.evolution.fidelity.value_or(0.0);
        const Grid& g = run.protocol.grid;
        double dev0 = 0.0, dev1 = 0.0;
        {
            const TrustWindow w0 = build_trust_window(run.protocol.rho.front(), TrustWindowParams{});
            const TrustWindow w1 = build_trust_window(run.protocol.rho.back(), TrustWindowParams{});
            for (int j = 0; j < g.n_points; ++j) {
                const double x = g.x(j);
                if (w0.in(j)) dev0 = std::max(dev0, std::abs(run.protocol.V.front()[j] - 0.5 * x * x));
                if (w1.in(j)) dev1 = std::max(dev1, std::abs(run.protocol.V.back()[j] - x * x / 18.0));
            }
        }
        // curvature of V at the trap center over interior slices
        double min_curvature = 1e300;
        const int j0 = static_cast<int>(std::lround((0.0 - g.x_min) / g.dx));
        for (int k = 1; k + 1 < run.protocol.n_slices(); ++k) {
            const auto& V = run.protocol.V[k];
            const double c = (V[j0 - 1] - 2.0 * V[j0] + V[j0 + 1]) / (g.dx * g.dx);
            min_curvature = std::min(min_curvature, c);
        }
        report("criterion 3: trap opening (xi = 1/3)",
               F >= 0.9999 && dev0 <= 1e-5 && dev1 <= 1e-5 && min_curvature < 0.0,
               fmt("F = %.6f, |V(,0) - x^2/2| = %.1e, |V(,t_f) - x^2/18| = %.1e, min V''(0,t) = %.2f",
                   F, dev0, dev1, min_curvature));
    }

    // ------------------------------------------------------------------- 4
    {
        const ProtocolRun run = run_builtin("harmonic-to-linear");
        const double F = run.evolution.fidelity.value_or(0.0);
        const Grid& g = run.protocol.grid;
        double dev0 = 0.0, dev1 = 0.0;
        const TrustWindow w0 = build_trust_window(run.protocol.rho.front(), TrustWindowParams{});
        const TrustWindow w1 = build_trust_window(run.protocol.rho.back(), TrustWindowParams{});
        for (int j = 0; j < g.n_points; ++j) {
            const double x = g.x(j);
            if (w0.in(j)) dev0 = std::max(dev0, std::abs(run.protocol.V.front()[j] - 0.5 * x * x));
            if (w1.in(j)) dev1 = std::max(dev1, std::abs(run.protocol.V.back()[j] - 1.5 * std::abs(x)));
        }
        report("criterion 4: harmonic to linear trap",
               F >= 0.999 && dev0 <= 1e-4 && dev1 <= 1e-4,
               fmt("F = %.6f, |V(,0) - x^2/2| = %.1e, |V(,t_f) - 3|x|/2| = %.1e", F, dev0, dev1));
    }

    // ------------------------------------------------------------------- 5
    {
        const ProtocolRun run = run_builtin("split-5");
        const double F = run.evolution.fidelity.value_or(0.0);
        const Grid& g = run.protocol.grid;
        std::vector<double> dens(g.n_points);
        double peak = 0.0;
        for (int j = 0; j < g.n_points; ++j) {
            dens[j] = std::norm(run.evolution.final_wave.values[j]);
            peak = std::max(peak, dens[j]);
        }
        int maxima = 0;
        for (int j = 1; j + 1 < g.n_points; ++j)
            if (dens[j] >= dens[j - 1] && dens[j] > dens[j + 1] && dens[j] > 1e-3 * peak) ++maxima;
        const std::vector<double>& centers = run.scenario.final.centers;
        std::vector<double> pops(centers.size(), 0.0);
        for (int j = 0; j < g.n_points; ++j)
            for (std::size_t m = 0; m < centers.size(); ++m)
                if (std::abs(g.x(j) - centers[m]) <= 0.375) pops[m] += dens[j] * g.dx;
        double mean = 0.0;
        for (double p : pops) mean += p;
        mean /= pops.size();
        double pop_dev = 0.0;
        for (double p : pops) pop_dev = std::max(pop_dev, std::abs(p - mean) / mean);
        report("criterion 5: five-way splitting",
               F >= 0.99 && maxima == 5 && pop_dev <= 0.01,
               fmt("F = %.6f, %d density maxima, site populations within %.2f%%", F, maxima,
                   100.0 * pop_dev));
    }

    // ------------------------------------------------------------------- 6
    {
        const ProtocolRun run = run_builtin("excited-to-excited");
        const double F = run.evolution.fidelity.value_or(0.0);
        double rho0 = 0.0;
        for (const auto& r : run.protocol.rho)
            rho0 = std::max(rho0, std::abs(detail::interpolate_at(r, 0.0)));
        report("criterion 6: excited-to-excited transfer",
               F >= 0.999 && rho0 <= 1e-8,
               fmt("F = %.6f, max |rho(0,t)| = %.1e", F, rho0));
    }

    // ------------------------------------------------------------------- 7
    {
        // re-run the cheap builtins once for the property battery
        const ProtocolRun expansion = run_builtin("expansion");
        const ProtocolRun h2l = run_builtin("harmonic-to-linear");
        const ProtocolRun split = run_builtin("split-5");
        const ProtocolRun e2e = run_builtin("excited-to-excited");
        const ProtocolRun g2e = run_builtin("ground-to-excited");

        {
            double worst = 0.0;
            std::string detail;
            for (const ProtocolRun* r : {&expansion, &h2l, &split, &e2e, &g2e}) {
                const double res = residual_max(r->protocol);
                worst = std::max(worst, res);
                double sten = 0.0;
                for (double v : r->protocol.diag.continuity_residual_stencil) sten = std::max(sten, v);
                detail += fmt("%s %.1e (stencil %.1e); ", r->scenario.name.c_str(), res, sten);
            }
            report("criterion 7a: continuity balance <= 1e-6 on every slice", worst <= 1e-6, detail);
        }
        {
            bool ok = true;
            std::string detail;
            for (const ProtocolRun* r : {&expansion, &split, &e2e, &g2e}) {
                const double tol = 1e-5;
                const double di = r->protocol.diag.boundary_deviation_initial;
                const double df = r->protocol.diag.boundary_deviation_final;
                ok = ok && di <= tol && df <= tol;
                detail += fmt("%s %.1e/%.1e; ", r->scenario.name.c_str(), di, df);
            }
            const double di = h2l.protocol.diag.boundary_deviation_initial;
            const double df = h2l.protocol.diag.boundary_deviation_final;
            ok = ok && di <= 1e-4 && df <= 1e-4;
            detail += fmt("harmonic-to-linear %.1e/%.1e (numerical tol 1e-4)", di, df);
            report("criterion 7b: endpoint potentials match the traps", ok, detail);
        }
        {
            const double p1 = parity_deviation(expansion.protocol);
            const double p2 = parity_deviation(e2e.protocol);
            const double p3 = parity_deviation(split.protocol);
            double asym = 0.0;
            {
                const DesignedProtocol& p = g2e.protocol;
                for (int k = 0; k < p.n_slices(); ++k) {
                    const TrustWindow w = build_trust_window(p.rho[k], TrustWindowParams{});
                    for (int j = 0; j < p.grid.n_points; ++j) {
                        const int jm = p.grid.n_points - 1 - j;
                        if (w.in(j) && w.in(jm))
                            asym = std::max(asym, std::abs(p.V[k][j] - p.V[k][jm]));
                    }
                }
            }
            report("criterion 7c: potential parity",
                   p1 <= 1e-6 && p2 <= 1e-6 && p3 <= 1e-6 && asym >= 0.1,
                   fmt("symmetric scenarios even to %.1e / %.1e / %.1e; node creation asymmetry %.2f",
                       p1, p2, p3, asym));
        }
        {
            // identity scenario on the energy-shifted trap: the ground energy
            // is exactly zero, so the phase-rate schedule vanishes and V is
            // literally static and equal to the trap
            const Grid grid(-12.0, 12.0, 1024, true);
            RealField shifted = RealField::sampled(grid, [](double x) { return 0.5 * x * x - 0.5; });
            Eigenstate state = harmonic_eigenstate(1.0, 0, grid);
            state.energy -= 0.5;  // shifting the trap leaves psi'' = 2(U - E) psi intact
            state.trap = TabulatedTrap{shifted};
            const StatePair pair = make_state_pair(state, state, InterpolationMode::positive_modulus);
            const Schedule schedule = Schedule::quintic(1.0, pair.E_i, pair.E_f);
            DesignInput din{grid, pair, schedule, 200, std::nullopt, TrustWindowParams{},
                            shifted, shifted, 0};
            const DesignedProtocol p = design(din);
            double static_dev = 0.0, trap_dev = 0.0;
            for (int k = 0; k < p.n_slices(); ++k) {
                const TrustWindow w = build_trust_window(p.rho[k], TrustWindowParams{});
                for (int j = 0; j < grid.n_points; ++j)
                    if (w.in(j)) {
                        static_dev = std::max(static_dev, std::abs(p.V[k][j] - p.V[0][j]));
                        trap_dev = std::max(trap_dev, std::abs(p.V[k][j] - shifted[j]));
                    }
            }
            PropagationConfig cfg;
            cfg.dt = 1e-3;
            cfg.potential = MoviePotential{&p, true};
            cfg.fidelity_target = ComplexWave::from_real(state.wave);
            const EvolutionResult evo = propagate(ComplexWave::from_real(state.wave), cfg, 1.0);
            const double F = evo.fidelity.value_or(0.0);
            report("criterion 7d: identity scenario",
                   trap_dev <= 1e-6 && static_dev <= 1e-6 && F >= 1.0 - 1e-8,
                   fmt("max |V - U_i| = %.1e, max |V(t) - V(0)| = %.1e, F = %.10f", trap_dev,
                       static_dev, F));
        }
        {
            const Grid grid(-12.0, 12.0, 1024, true);
            const Eigenstate s0 = harmonic_eigenstate(1.0, 0, grid);
            // free spreading
            PropagationConfig free_cfg;
            free_cfg.dt = 1e-3;
            free_cfg.potential = FunctionPotential{[](double, double) { return 0.0; }};
            const EvolutionResult spread = propagate(ComplexWave::from_real(s0.wave), free_cfg, 2.0);
            const double width = std::sqrt(2.0 * observables(spread.final_wave).x2_mean);
            const double width_err = std::abs(width - std::sqrt(5.0)) / std::sqrt(5.0);
            // coherent-state period
            ComplexWave displaced(grid);
            for (int j = 0; j < grid.n_points; ++j)
                displaced.values[j] =
                    std::pow(M_PI, -0.25) * std::exp(-0.5 * (grid.x(j) - 1.0) * (grid.x(j) - 1.0));
            PropagationConfig trap_cfg;
            trap_cfg.dt = 1e-3;
            trap_cfg.potential = FunctionPotential{[](double x, double) { return 0.5 * x * x; }};
            const double x_start = observables(displaced).x_mean;
            const EvolutionResult orbit = propagate(displaced, trap_cfg, 2.0 * M_PI);
            const double period_err = std::abs(observables(orbit.final_wave).x_mean - x_start);
            // dt-halving order using the analytic coherent state as reference
            double errors[3];
            int idx = 0;
            for (double dt : {4e-3, 2e-3, 1e-3}) {
                PropagationConfig cfg;
                cfg.dt = dt;
                cfg.potential = trap_cfg.potential;
                const EvolutionResult res = propagate(displaced, cfg, 2.0);
                double err2 = 0.0;
                for (int j = 0; j < grid.n_points; ++j) {
                    const double x = grid.x(j);
                    const double t = 2.0;
                    const std::complex<double> exact =
                        std::pow(M_PI, -0.25) *
                        std::exp(-0.5 * (x - std::cos(t)) * (x - std::cos(t))) *
                        std::polar(1.0, -(0.5 * t + x * std::sin(t) - 0.25 * std::sin(2.0 * t)));
                    err2 += std::norm(res.final_wave.values[j] - exact);
                }
                errors[idx++] = std::sqrt(err2 * grid.dx);
            }
            const double r1 = errors[0] / errors[1];
            const double r2 = errors[1] / errors[2];
            const double drift = g2e.evolution.norm_drift;
            report("criterion 7e: propagator oracles",
                   width_err <= 1e-5 && period_err <= 1e-5 && drift <= 1e-8 && r1 > 2.8 &&
                       r1 < 5.2 && r2 > 2.8 && r2 < 5.2,
                   fmt("spreading %.1e, period %.1e, norm drift %.1e, dt-halving ratios %.2f / %.2f",
                       width_err, period_err, drift, r1, r2));
        }
        {
            const Grid grid(-12.0, 12.0, 2048);
            const auto harm = solve_stationary(HarmonicTrap{1.0}, 6, grid);
            double worst = 0.0;
            for (int k = 0; k <= 5; ++k)
                worst = std::max(worst, std::abs(harm.states[k].energy - (k + 0.5)));
            const auto lin = solve_stationary(LinearTrap{1.5}, 1, grid);
            const double airy = 1.0187929716474071 * std::cbrt(1.5 * 1.5 / 2.0);
            const double lin_err = std::abs(lin.states[0].energy - airy);
            report("criterion 7f: eigensolver oracles", worst <= 1e-5 && lin_err <= 1e-3,
                   fmt("harmonic |E_n - (n+1/2)| <= %.1e (n <= 5), linear trap |E_0 - %.7f| = %.1e",
                       worst, airy, lin_err));
        }
    }

    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    std::printf("%d criterion(s) failed; total wall time %.1f s\n", g_failures, total);
    return g_failures;
}

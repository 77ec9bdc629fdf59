#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "trapmorph/designer.hpp"
#include "trapmorph/fft.hpp"
#include "trapmorph/grid.hpp"

namespace trapmorph {

/// Time-dependent potential sources for the propagator: a designed protocol
/// movie (linearly interpolated between slices, truncated version preferred
/// when present) or a closed-form V(x, t).
struct MoviePotential {
    const DesignedProtocol* protocol = nullptr;
    bool use_truncated = true;
};

struct FunctionPotential {
    std::function<double(double x, double t)> f;
};

using PotentialSource = std::variant<MoviePotential, FunctionPotential>;

struct PropagationConfig {
    double dt = 1e-3;
    PotentialSource potential;
    int snapshot_count = 0;  // 0 = no snapshots; otherwise uniformly spaced incl. endpoints
    std::optional<ComplexWave> fidelity_target;
};

struct EvolutionResult {
    ComplexWave final_wave;
    std::vector<std::pair<double, ComplexWave>> snapshots;
    double norm_drift = 0.0;
    std::optional<double> fidelity;
    double edge_density_max = 0.0;
};

/// Squared overlap |<a|b>|^2 in [0, 1].
inline double fidelity(const ComplexWave& a, const ComplexWave& b) {
    detail::require_same_grid(a.grid, b.grid, "fidelity");
    const std::complex<double> ov = inner(a, b);
    return std::norm(ov);
}

struct Observables {
    double norm = 0.0;
    double x_mean = 0.0;
    double x2_mean = 0.0;
    std::optional<double> energy;
};

/// Trapezoidal expectation values; kinetic energy evaluated in momentum space.
inline Observables observables(const ComplexWave& psi, const RealField* potential = nullptr) {
    const Grid& g = psi.grid;
    const int n = g.n_points;
    RealField dens(g), xdens(g), x2dens(g);
    for (int j = 0; j < n; ++j) {
        const double d = std::norm(psi.values[j]);
        const double x = g.x(j);
        dens[j] = d;
        xdens[j] = x * d;
        x2dens[j] = x * x * d;
    }
    Observables out;
    out.norm = std::sqrt(integrate(dens));
    const double n2 = integrate(dens);
    out.x_mean = integrate(xdens) / n2;
    out.x2_mean = integrate(x2dens) / n2;
    if (potential) {
        detail::require_same_grid(g, potential->grid, "observables");
        if (!g.spectral_capable()) throw NumericError("energy expectation needs a power-of-two grid");
        FftPlan plan(static_cast<std::size_t>(n));
        std::vector<std::complex<double>> a = psi.values;
        plan.forward(a);
        const double L = n * g.dx;
        double kin = 0.0;
        for (int k = 0; k < n; ++k) {
            const int kk = (k <= n / 2) ? k : k - n;
            const double w = 2.0 * M_PI * kk / L;
            kin += 0.5 * w * w * std::norm(a[k]);
        }
        kin *= g.dx / n;  // Parseval normalization for the unnormalized DFT
        RealField vdens(g);
        for (int j = 0; j < n; ++j) vdens[j] = (*potential)[j] * dens[j];
        out.energy = (kin + integrate(vdens)) / n2;
    }
    return out;
}

namespace detail {

inline void sample_potential(const PotentialSource& src, const Grid& g, double t, double t_f,
                             std::vector<double>& out) {
    if (const auto* movie = std::get_if<MoviePotential>(&src)) {
        const DesignedProtocol& p = *movie->protocol;
        const auto& slices = (movie->use_truncated && p.V_truncated) ? *p.V_truncated : p.V;
        const int n_t = p.n_slices();
        const double dt_slice = p.t_f() / (n_t - 1);
        double pos = t / dt_slice;
        const int k = std::clamp(static_cast<int>(std::floor(pos)), 0, n_t - 2);
        const double frac = std::clamp(pos - k, 0.0, 1.0);
        for (int j = 0; j < g.n_points; ++j)
            out[j] = slices[k][j] * (1.0 - frac) + slices[k + 1][j] * frac;
        return;
    }
    const auto& fn = std::get<FunctionPotential>(src).f;
    (void)t_f;
    for (int j = 0; j < g.n_points; ++j) out[j] = fn(g.x(j), t);
}

}  // namespace detail

/// Strang split-operator propagation psi(0) -> psi(t_f):
///   exp(-i V dt/2) exp(-i T dt) exp(-i V dt/2)
/// with the kinetic factor applied in momentum space and the potential
/// sampled at each step's midpoint time. The final norm is reported, never
/// silently renormalized.
inline EvolutionResult propagate(const ComplexWave& psi0, const PropagationConfig& cfg, double t_f) {
    const Grid& g = psi0.grid;
    const int n = g.n_points;
    if (!g.spectral_capable())
        throw ConfigError("propagation needs a power-of-two grid for the spectral kinetic factor");
    if (!(cfg.dt > 0.0)) throw ConfigError("propagation needs dt > 0");
    if (const auto* movie = std::get_if<MoviePotential>(&cfg.potential)) {
        if (!movie->protocol) throw ConfigError("propagation: null protocol");
        if (movie->protocol->t_f() < t_f * (1.0 - 1e-12))
            throw ConfigError("potential movie does not cover [0, t_f]");
        if (cfg.dt > t_f / 1000.0 * (1.0 + 1e-12))
            throw ConfigError("designed protocols need dt <= t_f/1000");
        detail::require_same_grid(g, movie->protocol->grid, "propagate");
    }
    {
        const double nrm = norm(psi0);
        if (std::abs(nrm - 1.0) > 1e-6)
            throw ConfigError("propagation needs a normalized initial wave (|norm-1| = " +
                              std::to_string(std::abs(nrm - 1.0)) + ")");
    }

    const long n_steps = std::lround(std::ceil(t_f / cfg.dt - 1e-9));
    const double dt = t_f / static_cast<double>(n_steps);

    FftPlan plan(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> kinetic_phase(n);
    const double L = n * g.dx;
    for (int k = 0; k < n; ++k) {
        const int kk = (k <= n / 2) ? k : k - n;
        const double w = 2.0 * M_PI * kk / L;
        kinetic_phase[k] = std::polar(1.0, -0.5 * w * w * dt);
    }

    std::vector<long> snapshot_steps;
    if (cfg.snapshot_count > 1) {
        for (int s = 0; s < cfg.snapshot_count; ++s)
            snapshot_steps.push_back(std::lround(static_cast<double>(s) * n_steps / (cfg.snapshot_count - 1)));
    }

    EvolutionResult out;
    std::vector<std::complex<double>> psi = psi0.values;
    std::vector<double> v(n);
    auto maybe_snapshot = [&](long step) {
        if (snapshot_steps.empty()) return;
        for (std::size_t s = 0; s < snapshot_steps.size(); ++s)
            if (snapshot_steps[s] == step) out.snapshots.emplace_back(step * dt, ComplexWave(g, psi));
        const double edge = std::max(std::norm(psi[0]), std::norm(psi[n - 1]));
        out.edge_density_max = std::max(out.edge_density_max, edge);
    };
    maybe_snapshot(0);

    for (long step = 0; step < n_steps; ++step) {
        const double t_mid = (step + 0.5) * dt;
        detail::sample_potential(cfg.potential, g, t_mid, t_f, v);
        for (int j = 0; j < n; ++j) psi[j] *= std::polar(1.0, -0.5 * v[j] * dt);
        plan.forward(psi);
        for (int k = 0; k < n; ++k) psi[k] *= kinetic_phase[k];
        plan.inverse(psi);
        for (int j = 0; j < n; ++j) psi[j] *= std::polar(1.0, -0.5 * v[j] * dt);
        maybe_snapshot(step + 1);
    }

    out.final_wave = ComplexWave(g, std::move(psi));
    out.norm_drift = std::abs(norm(out.final_wave) - 1.0);
    {
        const double edge = std::max(std::norm(out.final_wave.values[0]),
                                     std::norm(out.final_wave.values[n - 1]));
        out.edge_density_max = std::max(out.edge_density_max, edge);
    }
    if (cfg.fidelity_target) out.fidelity = fidelity(out.final_wave, *cfg.fidelity_target);
    return out;
}

}  // namespace trapmorph

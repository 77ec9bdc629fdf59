#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "trapmorph/grid.hpp"

namespace trapmorph {

// ---------------------------------------------------------------------------
// Trap catalog
// ---------------------------------------------------------------------------

struct HarmonicTrap {
    double omega = 1.0;  // U(x) = omega^2 x^2 / 2
};

struct LinearTrap {
    double slope = 1.0;  // U(x) = slope * |x|
};

struct LatticeTrap {
    std::vector<double> centers;  // strictly increasing site positions
    double omega_site = 1.0;
    std::vector<double> weights;  // per-site amplitude weights, all > 0
};

struct TabulatedTrap {
    RealField values;
};

using TrapPotential = std::variant<HarmonicTrap, LinearTrap, LatticeTrap, TabulatedTrap>;

inline void validate(const TrapPotential& trap) {
    if (const auto* h = std::get_if<HarmonicTrap>(&trap)) {
        if (!(h->omega > 0.0)) throw ConfigError("harmonic trap needs omega > 0");
    } else if (const auto* l = std::get_if<LinearTrap>(&trap)) {
        if (!(l->slope > 0.0)) throw ConfigError("linear trap needs slope > 0");
    } else if (const auto* lat = std::get_if<LatticeTrap>(&trap)) {
        if (lat->centers.empty() || lat->centers.size() != lat->weights.size())
            throw ConfigError("lattice trap needs matching non-empty centers and weights");
        if (!(lat->omega_site > 0.0)) throw ConfigError("lattice trap needs omega_site > 0");
        for (double w : lat->weights)
            if (!(w > 0.0)) throw ConfigError("lattice weights must be > 0");
        for (std::size_t j = 1; j < lat->centers.size(); ++j)
            if (!(lat->centers[j] > lat->centers[j - 1]))
                throw ConfigError("lattice centers must be strictly increasing");
    } else if (const auto* t = std::get_if<TabulatedTrap>(&trap)) {
        if (!detail::all_finite(t->values.values))
            throw ConfigError("tabulated trap has non-finite values");
    }
}

/// Implicit potential of a lattice target: the potential whose ground-state
/// manifold the multi-Gaussian target occupies, evaluated stably via the
/// log-sum-exp trick (the raw Gaussian ratio underflows in the far tails).
inline double lattice_effective_potential(const LatticeTrap& lat, double x) {
    const double w0 = lat.omega_site;
    double min_arg = std::numeric_limits<double>::infinity();
    for (double c : lat.centers) min_arg = std::min(min_arg, 0.5 * w0 * (x - c) * (x - c));
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < lat.centers.size(); ++j) {
        const double d = x - lat.centers[j];
        const double e = std::exp(-(0.5 * w0 * d * d - min_arg));
        num += lat.weights[j] * (w0 * w0 * d * d - w0) * e;
        den += lat.weights[j] * e;
    }
    return 0.5 * w0 + 0.5 * num / den;
}

inline double evaluate(const TrapPotential& trap, double x) {
    if (const auto* h = std::get_if<HarmonicTrap>(&trap)) return 0.5 * h->omega * h->omega * x * x;
    if (const auto* l = std::get_if<LinearTrap>(&trap)) return l->slope * std::abs(x);
    if (const auto* lat = std::get_if<LatticeTrap>(&trap)) return lattice_effective_potential(*lat, x);
    // tabulated: linear interpolation (overshoot-free for step-like tables;
    // the refinement pass of the eigensolver therefore gains full accuracy
    // only for the analytic trap kinds)
    const auto& tab = std::get<TabulatedTrap>(trap);
    const Grid& g = tab.values.grid;
    const double pos = (x - g.x_min) / g.dx;
    const int j = std::clamp(static_cast<int>(std::floor(pos)), 0, g.n_points - 2);
    const double frac = pos - j;
    return tab.values[j] * (1.0 - frac) + tab.values[j + 1] * frac;
}

inline RealField sample(const TrapPotential& trap, const Grid& g) {
    if (const auto* t = std::get_if<TabulatedTrap>(&trap)) {
        if (t->values.grid == g) return t->values;
    }
    return RealField::sampled(g, [&](double x) { return evaluate(trap, x); });
}

// ---------------------------------------------------------------------------
// Eigenstates
// ---------------------------------------------------------------------------

/// Stationary state of a trap. `curvature` holds psi'' obtained from the
/// stationary identity psi'' = 2 (U - E) psi, which is what the designer
/// consumes (exact on the discretization, no numerical differentiation).
struct Eigenstate {
    RealField wave;
    RealField curvature;
    double energy = 0.0;
    int quantum_number = 0;
    TrapPotential trap;
    int node_count = 0;
};

namespace detail {

inline int count_sign_changes(const std::vector<double>& v) {
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    const double floor = 1e-9 * peak;
    int count = 0;
    int last_sign = 0;
    for (double x : v) {
        if (std::abs(x) <= floor) continue;
        const int s = x > 0.0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) ++count;
        last_sign = s;
    }
    return count;
}

/// Flip the sign so the wave is positive at its rightmost antinode.
inline void fix_sign(std::vector<double>& v) {
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    for (int j = static_cast<int>(v.size()) - 1; j >= 0; --j) {
        if (std::abs(v[j]) > 0.3 * peak) {
            if (v[j] < 0.0)
                for (double& x : v) x = -x;
            return;
        }
    }
}

inline void normalize_trapz(std::vector<double>& v, double dx) {
    double s = 0.5 * (v.front() * v.front() + v.back() * v.back());
    for (std::size_t j = 1; j + 1 < v.size(); ++j) s += v[j] * v[j];
    const double nrm = std::sqrt(s * dx);
    for (double& x : v) x /= nrm;
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag d,
/// constant off-diagonal e) strictly below lambda, by Sturm sequence count.
inline int sturm_count_below(const std::vector<double>& d, double e, double lambda) {
    const double e2 = e * e;
    const double tiny = 1e-300;
    int count = 0;
    double q = d[0] - lambda;
    if (q < 0.0) ++count;
    for (std::size_t j = 1; j < d.size(); ++j) {
        double denom = q;
        if (std::abs(denom) < tiny) denom = (denom < 0.0) ? -tiny : tiny;
        q = d[j] - lambda - e2 / denom;
        if (q < 0.0) ++count;
    }
    return count;
}

/// k-th (0-based) eigenvalue by bisection on the Sturm count.
inline double tridiag_eigenvalue(const std::vector<double>& d, double e, int k) {
    double lo = d[0], hi = d[0];
    for (double x : d) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    lo -= 2.0 * std::abs(e) + 1.0;
    hi += 2.0 * std::abs(e) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max({1.0, std::abs(lo), std::abs(hi)}); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count_below(d, e, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Solve (T - lambda I) y = rhs for tridiagonal T with partial pivoting.
inline void tridiag_shifted_solve(const std::vector<double>& d, double e, double lambda,
                                  std::vector<double>& y) {
    const int n = static_cast<int>(d.size());
    std::vector<double> a(n), b(n, e), c(n, 0.0);  // diag, super, super2 after elimination
    for (int j = 0; j < n; ++j) a[j] = d[j] - lambda;
    b[n - 1] = 0.0;
    std::vector<double> sub(n, e);  // subdiagonal entries sub[j] couples rows j-1, j
    for (int j = 0; j < n - 1; ++j) {
        double pivot = a[j];
        double below = sub[j + 1];
        if (std::abs(below) > std::abs(pivot)) {
            // swap rows j and j+1
            std::swap(a[j], sub[j + 1]);
            std::swap(b[j], a[j + 1]);
            std::swap(c[j], b[j + 1]);
            std::swap(y[j], y[j + 1]);
            pivot = a[j];
            below = sub[j + 1];
        }
        if (pivot == 0.0) pivot = a[j] = 1e-300;
        const double m = below / pivot;
        a[j + 1] -= m * b[j];
        b[j + 1] -= m * c[j];
        y[j + 1] -= m * y[j];
    }
    // back substitution
    if (a[n - 1] == 0.0) a[n - 1] = 1e-300;
    y[n - 1] /= a[n - 1];
    if (n >= 2) y[n - 2] = (y[n - 2] - b[n - 2] * y[n - 1]) / (a[n - 2] == 0.0 ? 1e-300 : a[n - 2]);
    for (int j = n - 3; j >= 0; --j)
        y[j] = (y[j] - b[j] * y[j + 1] - c[j] * y[j + 2]) / (a[j] == 0.0 ? 1e-300 : a[j]);
}

/// Eigenvector by inverse iteration at the converged eigenvalue.
inline std::vector<double> tridiag_eigenvector(const std::vector<double>& d, double e, double lambda) {
    const int n = static_cast<int>(d.size());
    std::vector<double> y(n);
    std::uint64_t state = 0x2545f4914f6cdd1dULL;  // fixed seed: deterministic start vector
    for (int j = 0; j < n; ++j) {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        y[j] = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    }
    for (int it = 0; it < 4; ++it) {
        tridiag_shifted_solve(d, e, lambda, y);
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (double& v : y) v /= nrm;
    }
    return y;
}

struct TridiagSolveOut {
    std::vector<double> energies;
    std::vector<std::vector<double>> vectors;  // trapz-normalized, sign-fixed
};

/// Lowest n_states eigenpairs of -1/2 d^2/dx^2 + U on the given grid
/// (3-point Laplacian, Dirichlet edges).
inline TridiagSolveOut solve_fd_tridiag(const RealField& potential, int n_states) {
    const Grid& g = potential.grid;
    const int n = g.n_points;
    const double dx = g.dx;
    std::vector<double> d(n);
    for (int j = 0; j < n; ++j) d[j] = 1.0 / (dx * dx) + potential[j];
    const double e = -0.5 / (dx * dx);
    TridiagSolveOut out;
    for (int k = 0; k < n_states; ++k) {
        const double lambda = tridiag_eigenvalue(d, e, k);
        auto vec = tridiag_eigenvector(d, e, lambda);
        normalize_trapz(vec, dx);
        fix_sign(vec);
        out.energies.push_back(lambda);
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

}  // namespace detail

/// Analytic Hermite-Gaussian eigenstate of the harmonic trap, built with the
/// normalized three-term recursion (stable for the allowed n <= 20).
inline Eigenstate harmonic_eigenstate(double omega, int n, const Grid& grid) {
    if (!(omega > 0.0)) throw ConfigError("harmonic_eigenstate needs omega > 0");
    if (n < 0) throw ConfigError("harmonic_eigenstate needs n >= 0");
    if (n > 20)
        throw ConfigError("harmonic_eigenstate supports n <= 20; use solve_stationary for higher states");
    Eigenstate state;
    state.trap = HarmonicTrap{omega};
    state.energy = omega * (n + 0.5);
    state.quantum_number = n;
    state.node_count = n;
    state.wave = RealField(grid);
    state.curvature = RealField(grid);
    const double quarter = std::pow(omega / M_PI, 0.25);
    for (int j = 0; j < grid.n_points; ++j) {
        const double x = grid.x(j);
        const double y = std::sqrt(omega) * x;
        double fk = quarter * std::exp(-0.5 * y * y);  // n = 0
        double fkm1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double fkp1 = y * std::sqrt(2.0 / k) * fk - std::sqrt((k - 1.0) / k) * fkm1;
            fkm1 = fk;
            fk = fkp1;
        }
        state.wave[j] = fk;
        state.curvature[j] = (omega * omega * x * x - 2.0 * state.energy) * fk;
    }
    return state;
}

struct StationaryResult {
    std::vector<Eigenstate> states;
    bool edge_leakage = false;
    std::vector<double> edge_amplitudes;  // max |psi(edge)| / max |psi| per state
};

/// Lowest n_states eigenpairs of the trap on the grid. The 3-point
/// tridiagonal problem is solved by Sturm bisection + inverse iteration on
/// the requested grid and on the node-preserving doubled grid; eigenpairs are
/// Richardson-extrapolated to remove the O(dx^2) discretization bias.
inline StationaryResult solve_stationary(const TrapPotential& trap, int n_states, const Grid& grid,
                                         bool refine = true) {
    validate(trap);
    if (n_states < 1) throw ConfigError("solve_stationary needs n_states >= 1");
    RealField u_coarse = sample(trap, grid);
    if (!detail::all_finite(u_coarse.values)) throw ConfigError("trap is not finite on the grid");

    auto coarse = detail::solve_fd_tridiag(u_coarse, n_states);

    std::vector<std::vector<double>> waves(n_states);
    std::vector<double> energies(n_states);
    if (refine) {
        const Grid fine(grid.x_min, grid.x_max, 2 * grid.n_points - 1);
        RealField u_fine = sample(trap, fine);
        auto fine_out = detail::solve_fd_tridiag(u_fine, n_states);
        for (int k = 0; k < n_states; ++k) {
            energies[k] = (4.0 * fine_out.energies[k] - coarse.energies[k]) / 3.0;
            std::vector<double> v(grid.n_points);
            for (int j = 0; j < grid.n_points; ++j)
                v[j] = (4.0 * fine_out.vectors[k][2 * j] - coarse.vectors[k][j]) / 3.0;
            detail::normalize_trapz(v, grid.dx);
            detail::fix_sign(v);
            waves[k] = std::move(v);
        }
    } else {
        energies = coarse.energies;
        waves = coarse.vectors;
    }

    StationaryResult out;
    for (int k = 0; k < n_states; ++k) {
        if (k > 0 && !(energies[k] > energies[k - 1]))
            throw NumericError("solve_stationary: eigenvalues not strictly increasing");
        Eigenstate s;
        s.trap = trap;
        s.energy = energies[k];
        s.quantum_number = k;
        s.wave = RealField(grid, std::move(waves[k]));
        s.curvature = RealField(grid);
        for (int j = 0; j < grid.n_points; ++j)
            s.curvature[j] = 2.0 * (u_coarse[j] - s.energy) * s.wave[j];
        s.node_count = detail::count_sign_changes(s.wave.values);
        double peak = 0.0;
        for (double v : s.wave.values) peak = std::max(peak, std::abs(v));
        const double edge = std::max(std::abs(s.wave[0]), std::abs(s.wave[grid.n_points - 1])) / peak;
        out.edge_amplitudes.push_back(edge);
        if (edge > 1e-8) out.edge_leakage = true;
        out.states.push_back(std::move(s));
    }
    return out;
}

struct LatticeTargetResult {
    Eigenstate state;  // normalized equal-phase superposition; nominal energy omega_site/2
    bool overlap_warning = false;
    double max_adjacent_overlap = 0.0;
};

/// Normalized superposition of displaced harmonic ground states,
/// sum_j w_j psi0(x - c_j), with analytic curvature. The nominal energy
/// omega_site/2 only feeds the phase-rate schedule endpoint.
inline LatticeTargetResult lattice_target(const std::vector<double>& centers, double omega_site,
                                          const std::vector<double>& weights, const Grid& grid) {
    LatticeTrap lat{centers, omega_site, weights};
    validate(TrapPotential{lat});
    LatticeTargetResult out;

    // equal-phase weights normalized in l2 before the field normalization
    std::vector<double> w = weights;
    double wn = 0.0;
    for (double v : w) wn += v * v;
    wn = std::sqrt(wn);
    for (double& v : w) v /= wn;

    RealField wave(grid);
    RealField curv(grid);
    const double quarter = std::pow(omega_site / M_PI, 0.25);
    for (int j = 0; j < grid.n_points; ++j) {
        const double x = grid.x(j);
        double s = 0.0, sxx = 0.0;
        for (std::size_t m = 0; m < centers.size(); ++m) {
            const double d = x - centers[m];
            const double g = quarter * std::exp(-0.5 * omega_site * d * d);
            s += w[m] * g;
            sxx += w[m] * (omega_site * omega_site * d * d - omega_site) * g;
        }
        wave[j] = s;
        curv[j] = sxx;
    }
    const double nrm = norm(wave);
    if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw NumericError("lattice target underflows on this grid (sites narrower than the spacing)");
    for (int j = 0; j < grid.n_points; ++j) {
        wave[j] /= nrm;
        curv[j] /= nrm;
    }

    for (std::size_t m = 1; m < centers.size(); ++m) {
        const double d = centers[m] - centers[m - 1];
        const double ov = std::exp(-0.25 * omega_site * d * d);
        out.max_adjacent_overlap = std::max(out.max_adjacent_overlap, ov);
    }
    out.overlap_warning = out.max_adjacent_overlap > 1e-6;

    out.state.wave = std::move(wave);
    out.state.curvature = std::move(curv);
    out.state.energy = 0.5 * omega_site;
    out.state.quantum_number = 0;
    out.state.trap = lat;
    out.state.node_count = detail::count_sign_changes(out.state.wave.values);
    return out;
}

}  // namespace trapmorph

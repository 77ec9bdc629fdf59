#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <optional>
#include <thread>
#include <vector>

#include "trapmorph/grid.hpp"
#include "trapmorph/schedule.hpp"
#include "trapmorph/traps.hpp"

namespace trapmorph {

enum class InterpolationMode {
    positive_modulus,  // rho = N[(1-eta)|psi_i| + eta|psi_f|]; endpoints must be node-free
    signed_amplitude,  // rho = N[(1-eta) psi_i + eta psi_f]; rho may change sign
};

struct TrustWindowParams {
    double density_floor = 1e-8;     // |rho| <= floor is untrusted
    double node_margin_cells = 2.0;  // minimum exclusion radius around a rho-node, in dx
    // Around a node that carries probability flux the potential formula
    // develops a divergence of physical width ~ (J^2 / (2 cap rho'^4))^(1/4),
    // the region where the kinetic-drag term u^2/2 alone exceeds `cap`.
    // Points inside that radius are excluded as well; 0 picks the trap
    // energy scale max(1, |E_i|, |E_f|) from the schedule energies.
    double node_capture_level = 0.0;
};

/// Per-slice spatial mask where the potential formula is numerically
/// meaningful: |rho| above the density floor and away from rho-nodes.
struct TrustWindow {
    std::vector<char> mask;
    std::vector<double> nodes;  // interpolated node positions
    int count = 0;

    bool in(int j) const { return mask[j] != 0; }
};

/// Endpoint pair prepared for interpolation: signed or modulus amplitudes,
/// their curvatures, energies, and the static overlap S = <a_i|a_f>.
struct StatePair {
    RealField a_i, a_f;
    RealField a_i_xx, a_f_xx;
    double S = 0.0;
    double E_i = 0.0, E_f = 0.0;
    bool identical = false;  // S snapped to 1: endpoints are the same state
};

inline StatePair make_state_pair(const Eigenstate& psi_i, const Eigenstate& psi_f, InterpolationMode mode) {
    detail::require_same_grid(psi_i.wave.grid, psi_f.wave.grid, "make_state_pair");
    StatePair p;
    p.E_i = psi_i.energy;
    p.E_f = psi_f.energy;
    if (mode == InterpolationMode::positive_modulus) {
        if (psi_i.node_count != 0 || psi_f.node_count != 0)
            throw ConfigError("positive interpolation requires node-free endpoint states; "
                              "use the signed mode for excited states");
        auto absing = [](const Eigenstate& s) {
            RealField a = s.wave, axx = s.curvature;
            for (int j = 0; j < a.size(); ++j)
                if (a[j] < 0.0) {
                    a[j] = -a[j];
                    axx[j] = -axx[j];
                }
            return std::pair{a, axx};
        };
        std::tie(p.a_i, p.a_i_xx) = absing(psi_i);
        std::tie(p.a_f, p.a_f_xx) = absing(psi_f);
    } else {
        p.a_i = psi_i.wave;
        p.a_f = psi_f.wave;
        p.a_i_xx = psi_i.curvature;
        p.a_f_xx = psi_f.curvature;
    }
    p.S = inner(p.a_i, p.a_f);
    // |S| <= 1 mathematically; quadrature roundoff may spill over. S = 1 means
    // the endpoints coincide and the protocol degenerates to the static trap.
    if (p.S >= 1.0 - 1e-12) {
        p.S = 1.0;
        p.identical = true;
    }
    if (p.S <= -1.0 + 1e-12)
        throw NumericError("interpolation endpoints are anti-collinear (S = -1): normalization undefined");
    return p;
}

/// Interpolated amplitude at one instant with analytic time derivatives and
/// the exact spatial curvature inherited from the endpoint states.
struct AmplitudeSlice {
    RealField rho;     // N [(1-eta) a_i + eta a_f]
    RealField rho_t;   // analytic d rho / dt
    RealField rho_tt;  // analytic d^2 rho / dt^2
    RealField rho_xx;  // N [(1-eta) a_i'' + eta a_f'']
    double t = 0.0;
    double eta = 0.0;
    double N = 1.0;
};

inline AmplitudeSlice interpolate_rho(const StatePair& pair, const Schedule& schedule, double t) {
    const EtaSample es = schedule.eta(t);
    const double eta = es.value, eta_d = es.d1, eta_dd = es.d2;
    const double S = pair.S;

    const double g = 1.0 - 2.0 * eta * (1.0 - eta) * (1.0 - S);
    if (!(g > 1e-14))
        throw NumericError("interpolation normalization undefined (collinear endpoints)");
    const double g_eta = -2.0 * (1.0 - 2.0 * eta) * (1.0 - S);
    const double g_etaeta = 4.0 * (1.0 - S);
    const double g_d = g_eta * eta_d;
    const double g_dd = g_etaeta * eta_d * eta_d + g_eta * eta_dd;

    const double N = 1.0 / std::sqrt(g);
    const double N_d = -0.5 * std::pow(g, -1.5) * g_d;
    const double N_dd = -0.5 * std::pow(g, -1.5) * g_dd + 0.75 * std::pow(g, -2.5) * g_d * g_d;

    const Grid& grid = pair.a_i.grid;
    AmplitudeSlice s;
    s.t = t;
    s.eta = eta;
    s.N = N;
    s.rho = RealField(grid);
    s.rho_t = RealField(grid);
    s.rho_tt = RealField(grid);
    s.rho_xx = RealField(grid);
    for (int j = 0; j < grid.n_points; ++j) {
        const double q = (1.0 - eta) * pair.a_i[j] + eta * pair.a_f[j];
        const double dif = pair.identical ? 0.0 : pair.a_f[j] - pair.a_i[j];
        s.rho[j] = N * q;
        s.rho_t[j] = N_d * q + N * eta_d * dif;
        s.rho_tt[j] = N_dd * q + 2.0 * N_d * eta_d * dif + N * eta_dd * dif;
        s.rho_xx[j] = N * ((1.0 - eta) * pair.a_i_xx[j] + eta * pair.a_f_xx[j]);
    }
    return s;
}

namespace detail {

inline double interpolate_at(const RealField& f, double x) {
    const Grid& g = f.grid;
    const double pos = (x - g.x_min) / g.dx;
    const int j = std::clamp(static_cast<int>(std::floor(pos)), 0, g.n_points - 2);
    const double frac = pos - j;
    return f[j] * (1.0 - frac) + f[j + 1] * frac;
}

}  // namespace detail

/// Window builder. `node_radius` widens the per-node exclusion beyond the
/// cell-count floor; the designer derives it from the node flux so the
/// formula's divergence zone around a moving node is excised whole.
inline TrustWindow build_trust_window(const RealField& rho, const TrustWindowParams& params,
                                      double node_radius) {
    const Grid& g = rho.grid;
    const int n = g.n_points;
    TrustWindow w;
    w.mask.assign(n, 0);
    const double floor = params.density_floor;
    for (int j = 0; j < n; ++j) w.mask[j] = std::abs(rho[j]) > floor ? 1 : 0;
    // sign changes that matter at window scale are nodes
    for (int j = 0; j + 1 < n; ++j) {
        if (rho[j] * rho[j + 1] < 0.0 && std::max(std::abs(rho[j]), std::abs(rho[j + 1])) > floor) {
            const double xn = g.x(j) + g.dx * rho[j] / (rho[j] - rho[j + 1]);
            w.nodes.push_back(xn);
        }
    }
    const double radius = std::max(params.node_margin_cells * g.dx, node_radius);
    for (double xn : w.nodes) {
        const int lo = std::max(0, static_cast<int>(std::ceil((xn - radius - g.x_min) / g.dx)));
        const int hi = std::min(n - 1, static_cast<int>(std::floor((xn + radius - g.x_min) / g.dx)));
        for (int j = lo; j <= hi; ++j) w.mask[j] = 0;
    }
    for (char m : w.mask) w.count += m;
    if (w.count == 0) throw NumericError("trust window is empty");
    return w;
}

inline TrustWindow build_trust_window(const RealField& rho, const TrustWindowParams& params) {
    return build_trust_window(rho, params, 0.0);
}

namespace detail {

/// Fill non-window points with the value at the nearest window point.
inline void clamp_outside_window(std::vector<double>& v, const TrustWindow& w) {
    const int n = static_cast<int>(v.size());
    std::vector<int> left(n, -1), right(n, -1);
    int last = -1;
    for (int j = 0; j < n; ++j) {
        if (w.in(j)) last = j;
        left[j] = last;
    }
    last = -1;
    for (int j = n - 1; j >= 0; --j) {
        if (w.in(j)) last = j;
        right[j] = last;
    }
    for (int j = 0; j < n; ++j) {
        if (w.in(j)) continue;
        const int l = left[j], r = right[j];
        if (l < 0)
            v[j] = v[r];
        else if (r < 0)
            v[j] = v[l];
        else
            v[j] = (j - l <= r - j) ? v[l] : v[r];
    }
}

}  // namespace detail

namespace detail {

/// Probability flux through x from the time derivative of the cumulative
/// density, with the integration constant fixed so no flux crosses the grid
/// boundary. Each half of the grid is referenced to its own boundary: the
/// two constants agree to roundoff (the movie conserves the norm), and the
/// per-side anchoring keeps the tail flux cancellation-free where rho^2 is
/// dozens of orders below the bulk scale.
inline RealField boundary_anchored_flux(const RealField& cumulative) {
    const Grid& g = cumulative.grid;
    const int n = g.n_points;
    const double left = cumulative[0];
    const double right = cumulative[n - 1];
    RealField flux(g);
    for (int j = 0; j < n; ++j)
        flux[j] = cumulative[j] - (g.x(j) < 0.0 ? left : right);
    return flux;
}

}  // namespace detail

/// Hydrodynamic velocity u = [ d/dt integral rho^2 dx' ] / rho^2, with the
/// time derivative taken inside the integral analytically and the flux
/// integration constant fixed so no probability crosses the grid boundary
/// (for amplitude movies symmetric about x = 0 this coincides with anchoring
/// the integral at the origin; for asymmetric movies it is what keeps the
/// velocity finite away from nodes and confines the potential's divergence
/// to the moving node). Outside the trust window u is clamped to the
/// nearest window value.
inline RealField hydrodynamic_velocity(const RealField& rho, const RealField& rho_t, const TrustWindow& window) {
    detail::require_same_grid(rho.grid, rho_t.grid, "hydrodynamic_velocity");
    if (window.count == 0) throw NumericError("trust window is empty");
    RealField drho2(rho.grid);
    for (int j = 0; j < rho.size(); ++j) drho2[j] = 2.0 * rho[j] * rho_t[j];
    const RealField flux = detail::boundary_anchored_flux(cumulative_integral(drho2));
    RealField u(rho.grid);
    for (int j = 0; j < rho.size(); ++j)
        if (window.in(j)) u[j] = flux[j] / (rho[j] * rho[j]);
    detail::clamp_outside_window(u.values, window);
    return u;
}

struct PotentialSliceDiagnostics {
    double window_clamped_fraction = 0.0;  // points outside the trust window
    double truncated_fraction = 0.0;       // points clipped by the |V| <= c clamp
    double residual_max = 0.0;             // conservative continuity balance, relative
    double residual_stencil_max = 0.0;     // 5-point-stencil continuity residual, relative
};

/// Pointwise clamp of the potential to [-c, c].
inline RealField truncate_potential(const RealField& V, double c) {
    if (!(c > 0.0)) throw ConfigError("truncation level c must be > 0");
    RealField out = V;
    for (double& v : out.values) v = std::clamp(v, -c, c);
    return out;
}

namespace detail {

struct SliceFields {
    RealField u;
    RealField V;
    TrustWindow window;
    PotentialSliceDiagnostics diag;
};

/// Assemble one potential slice:
///   V = d/dt integral_0^x u dx' + rho''/(2 rho) - u^2/2 - dphi0/dt.
/// The transport integrand dtu = Ptt/rho^2 - Pt * dt(rho^2)/rho^4 is evaluated
/// at window points. Across node gaps the accumulation is bridged: linearly
/// interpolated integrand when the node carries no flux (regular, e.g. a
/// persistent symmetric node), zero contribution when the node moves and the
/// local integrand is non-integrable (the divergence is clipped by the
/// truncation step; both sides share the transport term's regular part).
/// Without an explicit window, one is built with the given node-exclusion
/// radius.
inline SliceFields assemble_slice(const AmplitudeSlice& s, double phi0_dot,
                                  const TrustWindow* explicit_window, const TrustWindowParams& params,
                                  double node_radius, std::optional<int> slice_index) {
    const Grid& g = s.rho.grid;
    const int n = g.n_points;
    const double dx = g.dx;

    RealField drho2(g), d2rho2(g);
    for (int j = 0; j < n; ++j) {
        drho2[j] = 2.0 * s.rho[j] * s.rho_t[j];
        d2rho2[j] = 2.0 * (s.rho_t[j] * s.rho_t[j] + s.rho[j] * s.rho_tt[j]);
    }
    // flux gauge: no probability current through the grid boundary
    const RealField flux = detail::boundary_anchored_flux(cumulative_integral(drho2));
    const RealField flux_t = detail::boundary_anchored_flux(cumulative_integral(d2rho2));

    SliceFields out;
    if (explicit_window)
        out.window = *explicit_window;
    else
        out.window = build_trust_window(s.rho, params, node_radius);
    const TrustWindow& w = out.window;
    out.u = RealField(g);
    std::vector<double> dtu(n, 0.0);
    for (int j = 0; j < n; ++j) {
        if (!w.in(j)) continue;
        const double r2 = s.rho[j] * s.rho[j];
        out.u[j] = flux[j] / r2;
        dtu[j] = flux_t[j] / r2 - flux[j] * drho2[j] / (r2 * r2);
    }
    detail::clamp_outside_window(out.u.values, w);

    // Bridge the transport integrand over untrusted stretches.
    double pt_scale = 0.0;
    for (int j = 0; j < n; ++j) pt_scale = std::max(pt_scale, std::abs(flux[j]));
    std::vector<char> bridged(n, 0);
    {
        int j = 0;
        while (j < n) {
            if (w.in(j)) {
                ++j;
                continue;
            }
            int k = j;
            while (k < n && !w.in(k)) ++k;  // gap is [j, k)
            const int l = j - 1, r = k;
            if (l < 0 || r >= n) {
                // tail beyond the outer window edge: contributes nothing
                for (int m = j; m < k; ++m) {
                    dtu[m] = 0.0;
                    bridged[m] = 1;
                }
            } else {
                bool has_flux_node = false;
                for (double xn : w.nodes) {
                    if (xn >= g.x(l) && xn <= g.x(r)) {
                        const double node_flux = std::abs(detail::interpolate_at(flux, xn));
                        if (node_flux > 1e-6 * std::max(pt_scale, 1e-300)) has_flux_node = true;
                    }
                }
                for (int m = j; m < k; ++m) {
                    if (has_flux_node) {
                        dtu[m] = 0.0;  // gauge: the gap contributes nothing
                    } else {
                        const double frac = static_cast<double>(m - l) / (r - l);
                        dtu[m] = dtu[l] * (1.0 - frac) + dtu[r] * frac;
                    }
                    bridged[m] = 1;
                }
            }
            j = k;
        }
        // a moving-node gap must not leak its huge edge values through the
        // endpoint-corrected quadrature; mark its flanks for the plain rule
    }

    // Accumulate dtW = integral_0^x dtu with the corrected trapezoid where the
    // stencil is clean and the plain rule near gaps and edges.
    std::vector<double> cum(n, 0.0);
    {
        RealField dtu_field(g, dtu);
        const RealField dtu_prime = first_derivative(dtu_field, DerivMethod::finite_difference);
        auto clean = [&](int j) {
            if (j < 2 || j > n - 3) return false;
            for (int m = j - 2; m <= j + 2; ++m)
                if (bridged[m]) return false;
            return true;
        };
        double acc = 0.0;
        for (int j = 1; j < n; ++j) {
            double inc = 0.5 * dx * (dtu[j - 1] + dtu[j]);
            if (clean(j - 1) && clean(j)) inc -= (dx * dx / 12.0) * (dtu_prime[j] - dtu_prime[j - 1]);
            acc += inc;
            cum[j] = acc;
        }
        // subtract the anchor value at x = 0
        RealField cum_field(g, cum);
        const double anchor = detail::interpolate_at(cum_field, 0.0);
        for (double& v : cum) v -= anchor;
    }

    out.V = RealField(g);
    for (int j = 0; j < n; ++j) {
        if (!w.in(j)) continue;
        const double uj = out.u[j];
        out.V[j] = cum[j] + 0.5 * s.rho_xx[j] / s.rho[j] - 0.5 * uj * uj - phi0_dot;
        if (!std::isfinite(out.V[j]))
            throw NumericError("non-finite potential inside the trust window (tighten the density floor)",
                               slice_index);
    }
    detail::clamp_outside_window(out.V.values, w);
    out.diag.window_clamped_fraction = 1.0 - static_cast<double>(w.count) / n;

    // continuity diagnostics from the stored flux rho^2 u
    double wmax = 0.0;
    for (int j = 0; j < n; ++j) wmax = std::max(wmax, std::abs(drho2[j]));
    if (wmax > 0.0) {
        const RealField w_prime = first_derivative(drho2, DerivMethod::finite_difference);
        std::vector<double> stored_flux(n);
        for (int j = 0; j < n; ++j) stored_flux[j] = s.rho[j] * s.rho[j] * out.u[j];
        double cons = 0.0;
        for (int j = 1; j < n; ++j) {
            if (!w.in(j) || !w.in(j - 1)) continue;
            const double inc = 0.5 * dx * (drho2[j - 1] + drho2[j]) -
                               (dx * dx / 12.0) * (w_prime[j] - w_prime[j - 1]);
            cons = std::max(cons, std::abs((stored_flux[j] - stored_flux[j - 1] - inc) / dx));
        }
        out.diag.residual_max = cons / wmax;
        RealField flux_field(g, stored_flux);
        const RealField flux_x = first_derivative(flux_field, DerivMethod::finite_difference);
        double sten = 0.0;
        for (int j = 2; j < n - 2; ++j) {
            bool interior = true;
            for (int m = j - 2; m <= j + 2; ++m) interior = interior && w.in(m);
            if (interior) sten = std::max(sten, std::abs(drho2[j] - flux_x[j]));
        }
        out.diag.residual_stencil_max = sten / wmax;
    }
    return out;
}

}  // namespace detail

/// Public single-slice potential assembly with a caller-provided window.
inline RealField assemble_potential(const AmplitudeSlice& slice, double phi0_dot, const TrustWindow& window) {
    return detail::assemble_slice(slice, phi0_dot, &window, TrustWindowParams{}, 0.0, std::nullopt).V;
}

struct DesignerDiagnostics {
    std::vector<double> continuity_residual;          // per slice, relative
    std::vector<double> continuity_residual_stencil;  // per slice, relative
    std::vector<double> window_clamped_fraction;      // per slice
    std::vector<double> truncated_fraction;           // per slice (when c set)
    std::vector<std::vector<double>> nodes;           // per slice node positions
    double boundary_deviation_initial = 0.0;          // max |V(x,0) - U_i| on the window
    double boundary_deviation_final = 0.0;            // max |V(x,t_f) - U_f| on the window
};

/// The full designed protocol: the prescribed amplitude movie, the
/// hydrodynamic velocity, the assembled potential and its truncation.
struct DesignedProtocol {
    Grid grid;
    std::vector<double> times;
    std::vector<RealField> rho;
    std::vector<RealField> u;
    std::vector<RealField> V;
    std::optional<std::vector<RealField>> V_truncated;
    std::optional<double> c;
    double S_overlap = 0.0;
    std::vector<double> N_of_t;
    std::vector<double> eta_of_t;
    double node_exclusion_radius = 0.0;  // physical halfwidth excluded around nodes
    DesignerDiagnostics diag;

    double t_f() const { return times.back(); }
    int n_slices() const { return static_cast<int>(times.size()); }

    const std::vector<RealField>& applied_potential() const { return V_truncated ? *V_truncated : V; }
};

struct DesignInput {
    Grid grid;
    StatePair pair;
    Schedule schedule;
    int n_t = 2000;
    std::optional<double> truncation_c;
    TrustWindowParams window;
    std::optional<RealField> U_i;  // endpoint potentials for the boundary diagnostics
    std::optional<RealField> U_f;
    int workers = 0;  // 0 = hardware choice
};

inline DesignedProtocol design(const DesignInput& in) {
    if (in.n_t < 2) throw ConfigError("designer needs n_t >= 2 time slices");
    if (!in.grid.contains_origin()) throw ConfigError("designer needs 0 in [x_min, x_max]");
    const int n_t = in.n_t;
    const double t_f = in.schedule.t_f();

    DesignedProtocol p;
    p.grid = in.grid;
    p.c = in.truncation_c;
    p.S_overlap = in.pair.S;
    p.times.resize(n_t);
    p.rho.resize(n_t);
    p.u.resize(n_t);
    p.V.resize(n_t);
    if (in.truncation_c) p.V_truncated = std::vector<RealField>(n_t);
    p.N_of_t.resize(n_t);
    p.eta_of_t.resize(n_t);
    p.diag.continuity_residual.resize(n_t);
    p.diag.continuity_residual_stencil.resize(n_t);
    p.diag.window_clamped_fraction.resize(n_t);
    p.diag.truncated_fraction.resize(n_t, 0.0);
    p.diag.nodes.resize(n_t);

    const double capture_level =
        in.window.node_capture_level > 0.0
            ? in.window.node_capture_level
            : std::max({1.0, std::abs(in.pair.E_i), std::abs(in.pair.E_f)});

    // Pre-pass: the widest divergence zone any flux-carrying node develops
    // over the protocol. Applying that radius uniformly (rather than per
    // slice) keeps the transport-term gauge steady while the node crosses
    // the wave packet.
    double node_radius = 0.0;
    for (int k = 0; k < n_t; ++k) {
        const double t = t_f * static_cast<double>(k) / (n_t - 1);
        const AmplitudeSlice s = interpolate_rho(in.pair, in.schedule, t);
        const TrustWindow w = build_trust_window(s.rho, in.window);
        if (w.nodes.empty()) continue;
        RealField drho2(in.grid);
        for (int j = 0; j < in.grid.n_points; ++j) drho2[j] = 2.0 * s.rho[j] * s.rho_t[j];
        const RealField flux = detail::boundary_anchored_flux(cumulative_integral(drho2));
        const RealField slope = first_derivative(s.rho, DerivMethod::finite_difference);
        for (double xn : w.nodes) {
            const double j_n = detail::interpolate_at(flux, xn);
            const double rp = detail::interpolate_at(slope, xn);
            if (rp == 0.0) continue;
            const double s_star =
                std::pow(j_n * j_n / (2.0 * capture_level * rp * rp * rp * rp), 0.25);
            node_radius = std::max(node_radius, std::min(s_star, 0.125 * (in.grid.x_max - in.grid.x_min)));
        }
    }
    p.node_exclusion_radius = node_radius;

    auto run_slice = [&](int k) {
        const double t = t_f * static_cast<double>(k) / (n_t - 1);
        const AmplitudeSlice s = interpolate_rho(in.pair, in.schedule, t);
        detail::SliceFields f =
            detail::assemble_slice(s, in.schedule.phi0(t).d1, nullptr, in.window, node_radius, k);
        if (in.truncation_c) {
            RealField vt = truncate_potential(f.V, *in.truncation_c);
            int clipped = 0;
            for (int j = 0; j < in.grid.n_points; ++j)
                if (vt[j] != f.V[j]) ++clipped;
            p.diag.truncated_fraction[k] = static_cast<double>(clipped) / in.grid.n_points;
            (*p.V_truncated)[k] = std::move(vt);
        }
        p.times[k] = t;
        p.rho[k] = s.rho;
        p.u[k] = std::move(f.u);
        p.V[k] = std::move(f.V);
        p.N_of_t[k] = s.N;
        p.eta_of_t[k] = s.eta;
        p.diag.continuity_residual[k] = f.diag.residual_max;
        p.diag.continuity_residual_stencil[k] = f.diag.residual_stencil_max;
        p.diag.window_clamped_fraction[k] = f.diag.window_clamped_fraction;
        p.diag.nodes[k] = std::move(f.window.nodes);
    };

    int workers = in.workers > 0 ? in.workers
                                 : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n_t);
    if (workers <= 1) {
        for (int k = 0; k < n_t; ++k) run_slice(k);
    } else {
        std::vector<std::future<void>> futs;
        std::atomic<int> next{0};
        for (int wkr = 0; wkr < workers; ++wkr) {
            futs.push_back(std::async(std::launch::async, [&]() {
                for (int k = next.fetch_add(1); k < n_t; k = next.fetch_add(1)) run_slice(k);
            }));
        }
        for (auto& f : futs) f.get();  // rethrows slice errors
    }

    auto boundary_dev = [&](int k, const std::optional<RealField>& U) {
        if (!U) return 0.0;
        const TrustWindow w = build_trust_window(p.rho[k], in.window, node_radius);
        double dev = 0.0;
        for (int j = 0; j < in.grid.n_points; ++j)
            if (w.in(j)) dev = std::max(dev, std::abs(p.V[k][j] - (*U)[j]));
        return dev;
    };
    p.diag.boundary_deviation_initial = boundary_dev(0, in.U_i);
    p.diag.boundary_deviation_final = boundary_dev(n_t - 1, in.U_f);
    return p;
}

}  // namespace trapmorph

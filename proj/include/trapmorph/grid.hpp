#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "trapmorph/errors.hpp"
#include "trapmorph/fft.hpp"

namespace trapmorph {

/// Uniform 1D spatial lattice. All fields in the library live on one of these.
/// Units are dimensionless throughout: hbar = m = 1, lengths in units of the
/// reference trap's oscillator length, energies in units of its hbar*omega.
struct Grid {
    double x_min = 0.0;
    double x_max = 0.0;
    int n_points = 0;
    double dx = 0.0;

    Grid() = default;

    Grid(double xmin, double xmax, int n, bool require_power_of_two = false)
        : x_min(xmin), x_max(xmax), n_points(n) {
        if (n < 16) throw ConfigError("grid needs n_points >= 16, got " + std::to_string(n));
        if (!(xmax > xmin)) throw ConfigError("grid needs x_max > x_min");
        if (require_power_of_two && !is_power_of_two(static_cast<std::size_t>(n)))
            throw ConfigError("spectral grid needs a power-of-two n_points, got " + std::to_string(n));
        dx = (xmax - xmin) / (n - 1);
    }

    double x(int j) const { return x_min + j * dx; }

    bool spectral_capable() const { return is_power_of_two(static_cast<std::size_t>(n_points)); }

    bool contains_origin() const { return x_min <= 0.0 && 0.0 <= x_max; }

    std::vector<double> coordinates() const {
        std::vector<double> xs(n_points);
        for (int j = 0; j < n_points; ++j) xs[j] = x(j);
        return xs;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.x_min == b.x_min && a.x_max == b.x_max && a.n_points == b.n_points;
    }
    friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }
};

/// Real signed amplitude (or any real function) sampled on a Grid.
struct RealField {
    Grid grid;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(const Grid& g) : grid(g), values(g.n_points, 0.0) {}
    RealField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (static_cast<int>(values.size()) != g.n_points)
            throw GridMismatchError("field size does not match grid");
    }

    template <class F>
    static RealField sampled(const Grid& g, F&& f) {
        RealField out(g);
        for (int j = 0; j < g.n_points; ++j) out.values[j] = f(g.x(j));
        return out;
    }

    double& operator[](int j) { return values[j]; }
    double operator[](int j) const { return values[j]; }
    int size() const { return grid.n_points; }
};

/// Complex wavefunction sampled on a Grid.
struct ComplexWave {
    Grid grid;
    std::vector<std::complex<double>> values;

    ComplexWave() = default;
    explicit ComplexWave(const Grid& g) : grid(g), values(g.n_points, {0.0, 0.0}) {}
    ComplexWave(const Grid& g, std::vector<std::complex<double>> v) : grid(g), values(std::move(v)) {
        if (static_cast<int>(values.size()) != g.n_points)
            throw GridMismatchError("wave size does not match grid");
    }

    static ComplexWave from_real(const RealField& f) {
        ComplexWave out(f.grid);
        for (int j = 0; j < f.size(); ++j) out.values[j] = {f.values[j], 0.0};
        return out;
    }

    int size() const { return grid.n_points; }
};

namespace detail {

inline void require_same_grid(const Grid& a, const Grid& b, const char* op) {
    if (a != b) throw GridMismatchError(std::string(op) + ": fields live on different grids");
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace detail

/// Trapezoidal-rule inner product <a|b> = integral a(x) b(x) dx.
inline double inner(const RealField& a, const RealField& b) {
    detail::require_same_grid(a.grid, b.grid, "inner");
    const int n = a.size();
    double s = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    for (int j = 1; j < n - 1; ++j) s += a[j] * b[j];
    return s * a.grid.dx;
}

/// Trapezoidal <a|b> = integral conj(a(x)) b(x) dx; conjugate-symmetric.
inline std::complex<double> inner(const ComplexWave& a, const ComplexWave& b) {
    detail::require_same_grid(a.grid, b.grid, "inner");
    const int n = a.size();
    std::complex<double> s = 0.5 * (std::conj(a.values[0]) * b.values[0] +
                                    std::conj(a.values[n - 1]) * b.values[n - 1]);
    for (int j = 1; j < n - 1; ++j) s += std::conj(a.values[j]) * b.values[j];
    return s * a.grid.dx;
}

inline double norm(const RealField& f) { return std::sqrt(inner(f, f)); }

inline double norm(const ComplexWave& f) { return std::sqrt(std::abs(inner(f, f))); }

/// Full-interval trapezoidal integral of f.
inline double integrate(const RealField& f) {
    const int n = f.size();
    double s = 0.5 * (f[0] + f[n - 1]);
    for (int j = 1; j < n - 1; ++j) s += f[j];
    return s * f.grid.dx;
}

enum class DerivMethod { finite_difference, spectral };

/// Diagnostics attached to a spectral derivative of a field that does not
/// decay at the grid edges (the periodic extension then has a kink).
struct SpectralDiagnostics {
    bool edge_leakage = false;
    double edge_magnitude = 0.0;
};

/// First derivative. Finite-difference mode uses 5-point stencils
/// (centered interior, one-sided at the edges); spectral mode multiplies by ik
/// on the periodic extension of period n*dx.
inline RealField first_derivative(const RealField& f, DerivMethod method = DerivMethod::finite_difference,
                                  SpectralDiagnostics* diag = nullptr) {
    const int n = f.size();
    const double dx = f.grid.dx;
    RealField out(f.grid);
    if (method == DerivMethod::finite_difference) {
        if (n < 5) throw NumericError("first_derivative needs at least 5 points");
        for (int j = 2; j < n - 2; ++j)
            out[j] = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * dx);
        out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * dx);
        out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * dx);
        out[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / (12.0 * dx);
        out[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / (12.0 * dx);
        return out;
    }
    if (!f.grid.spectral_capable())
        throw NumericError("spectral derivative needs a power-of-two grid");
    const double edge = std::max(std::abs(f[0]), std::abs(f[n - 1]));
    if (diag) {
        diag->edge_magnitude = edge;
        diag->edge_leakage = edge > 1e-10;
    }
    FftPlan plan(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> a(n);
    for (int j = 0; j < n; ++j) a[j] = {f[j], 0.0};
    plan.forward(a);
    const double L = n * dx;
    for (int k = 0; k < n; ++k) {
        const int kk = (k < n / 2) ? k : k - n;
        // drop the unmatched Nyquist mode: its ik image is not real-symmetric
        const double w = (k == n / 2) ? 0.0 : 2.0 * M_PI * kk / L;
        a[k] *= std::complex<double>(0.0, w);
    }
    plan.inverse(a);
    for (int j = 0; j < n; ++j) out[j] = a[j].real();
    return out;
}

/// Second derivative d^2 f/dx^2 on the same grid.
inline RealField second_derivative(const RealField& f, DerivMethod method = DerivMethod::finite_difference,
                                   SpectralDiagnostics* diag = nullptr) {
    const int n = f.size();
    const double dx = f.grid.dx;
    RealField out(f.grid);
    if (method == DerivMethod::finite_difference) {
        if (n < 5) throw NumericError("second_derivative needs at least 5 points");
        const double h2 = 12.0 * dx * dx;
        for (int j = 2; j < n - 2; ++j)
            out[j] = (-f[j - 2] + 16.0 * f[j - 1] - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) / h2;
        out[0] = (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4]) / h2;
        out[1] = (11.0 * f[0] - 20.0 * f[1] + 6.0 * f[2] + 4.0 * f[3] - f[4]) / h2;
        out[n - 2] = (11.0 * f[n - 1] - 20.0 * f[n - 2] + 6.0 * f[n - 3] + 4.0 * f[n - 4] - f[n - 5]) / h2;
        out[n - 1] = (35.0 * f[n - 1] - 104.0 * f[n - 2] + 114.0 * f[n - 3] - 56.0 * f[n - 4] + 11.0 * f[n - 5]) / h2;
        return out;
    }
    if (!f.grid.spectral_capable())
        throw NumericError("spectral derivative needs a power-of-two grid");
    const double edge = std::max(std::abs(f[0]), std::abs(f[n - 1]));
    if (diag) {
        diag->edge_magnitude = edge;
        diag->edge_leakage = edge > 1e-10;
    }
    FftPlan plan(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> a(n);
    for (int j = 0; j < n; ++j) a[j] = {f[j], 0.0};
    plan.forward(a);
    const double L = n * dx;
    for (int k = 0; k < n; ++k) {
        const int kk = (k <= n / 2) ? k : k - n;
        const double w = 2.0 * M_PI * kk / L;
        a[k] *= -w * w;
    }
    plan.inverse(a);
    for (int j = 0; j < n; ++j) out[j] = a[j].real();
    return out;
}

/// Cumulative integral F(x) = integral_0^x f(x') dx', anchored so F(0) = 0.
/// Accumulation is trapezoidal with the Euler-Maclaurin endpoint correction
/// (-dx^2/12 * [f'(b) - f'(a)] per cell, f' from the 5-point stencil), which
/// keeps the derivative-recovery error at the dx^4 level. When 0 is not a
/// grid node the anchor value is removed by local cubic interpolation.
inline RealField cumulative_integral(const RealField& f) {
    const Grid& g = f.grid;
    if (!g.contains_origin())
        throw ConfigError("cumulative_integral: grid must contain x = 0");
    const int n = f.size();
    const double dx = g.dx;
    RealField fp = first_derivative(f, DerivMethod::finite_difference);
    RealField out(g);
    double acc = 0.0;
    out[0] = 0.0;
    for (int j = 1; j < n; ++j) {
        acc += 0.5 * dx * (f[j - 1] + f[j]) - (dx * dx / 12.0) * (fp[j] - fp[j - 1]);
        out[j] = acc;
    }
    // subtract the value at x = 0
    double anchor;
    const double pos = (0.0 - g.x_min) / dx;
    const int j0 = std::clamp(static_cast<int>(std::floor(pos)), 0, n - 1);
    if (std::abs(g.x(j0)) < 1e-12 * std::max(1.0, std::abs(g.x_max))) {
        anchor = out[j0];
    } else if (j0 + 1 < n && std::abs(g.x(j0 + 1)) < 1e-12 * std::max(1.0, std::abs(g.x_max))) {
        anchor = out[j0 + 1];
    } else {
        // cubic Lagrange through the four nodes bracketing 0
        const int a = std::clamp(j0 - 1, 0, n - 4);
        double val = 0.0;
        for (int i = 0; i < 4; ++i) {
            double li = 1.0;
            for (int k = 0; k < 4; ++k) {
                if (k == i) continue;
                li *= (0.0 - g.x(a + k)) / (g.x(a + i) - g.x(a + k));
            }
            val += li * out[a + i];
        }
        anchor = val;
    }
    for (int j = 0; j < n; ++j) out[j] -= anchor;
    return out;
}

inline void validate_finite(const RealField& f, const char* what) {
    if (!detail::all_finite(f.values)) throw NumericError(std::string(what) + ": non-finite values");
}

}  // namespace trapmorph

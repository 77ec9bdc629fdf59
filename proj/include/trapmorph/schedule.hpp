#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "trapmorph/errors.hpp"

namespace trapmorph {

struct EtaSample {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

struct Phi0Sample {
    double value = 0.0;
    double d1 = 0.0;
};

enum class Phi0Convention {
    polynomial,  // cubic with phi0(0)=phi0(t_f)=0, dphi0(0)=-E_i, dphi0(t_f)=-E_f
    zero,        // phi0 identically zero (energies treated as zero; shifts V vertically)
};

/// Time interpolation pair (eta(t), phi0(t)) with analytic derivatives.
///
/// eta switches smoothly from 0 to 1 with vanishing first and second
/// derivatives at both ends; those endpoint conditions are what make the
/// designed potential coincide with the physical traps at t = 0 and t = t_f,
/// so they are checked numerically at construction.
class Schedule {
  public:
    using EtaFn = std::function<EtaSample(double)>;

    static Schedule quintic(double t_f, double E_i, double E_f,
                            Phi0Convention convention = Phi0Convention::polynomial) {
        return Schedule(t_f, E_i, E_f, nullptr, convention);
    }

    /// User-supplied switch function; must carry its own analytic derivatives
    /// and satisfy the same endpoint conditions (no smoothing is applied).
    static Schedule custom(double t_f, double E_i, double E_f, EtaFn eta,
                           Phi0Convention convention = Phi0Convention::polynomial) {
        return Schedule(t_f, E_i, E_f, std::move(eta), convention);
    }

    double t_f() const { return t_f_; }
    double E_i() const { return E_i_; }
    double E_f() const { return E_f_; }
    Phi0Convention convention() const { return convention_; }

    EtaSample eta(double t) const {
        check_domain(t);
        if (eta_fn_) return eta_fn_(t);
        return quintic_eta(t);
    }

    Phi0Sample phi0(double t) const {
        check_domain(t);
        if (convention_ == Phi0Convention::zero) return {0.0, 0.0};
        // phi0 = t_f * s(1-s) * ((E_i+E_f) s - E_i), s = t/t_f
        const double a = E_i_, b = E_f_;
        const double s = t / t_f_;
        const double value = t_f_ * (s * (1.0 - s) * ((a + b) * s - a));
        const double d1 = -3.0 * (a + b) * s * s + 2.0 * (2.0 * a + b) * s - a;
        return {value, d1};
    }

  private:
    Schedule(double t_f, double E_i, double E_f, EtaFn eta, Phi0Convention convention)
        : t_f_(t_f), E_i_(E_i), E_f_(E_f), eta_fn_(std::move(eta)), convention_(convention) {
        if (!(t_f > 0.0)) throw ConfigError("schedule needs t_f > 0");
        validate_boundaries();
    }

    EtaSample quintic_eta(double t) const {
        const double s = t / t_f_;
        const double s2 = s * s;
        const double omr = 1.0 - s;
        return {
            s2 * s * (10.0 - 15.0 * s + 6.0 * s2),
            30.0 * s2 * omr * omr / t_f_,
            60.0 * s * omr * (1.0 - 2.0 * s) / (t_f_ * t_f_),
        };
    }

    void check_domain(double t) const {
        if (t < -1e-12 * t_f_ || t > t_f_ * (1.0 + 1e-12))
            throw NumericError("schedule evaluated outside [0, t_f]: t = " + std::to_string(t));
    }

    void validate_boundaries() const {
        const double tol = 1e-12;
        const EtaSample e0 = eta_fn_ ? eta_fn_(0.0) : quintic_eta(0.0);
        const EtaSample e1 = eta_fn_ ? eta_fn_(t_f_) : quintic_eta(t_f_);
        auto fail = [](const std::string& which) {
            throw ConfigError("schedule boundary condition violated: " + which);
        };
        if (std::abs(e0.value) > tol) fail("eta(0) = 0");
        if (std::abs(e1.value - 1.0) > tol) fail("eta(t_f) = 1");
        if (std::abs(e0.d1) * t_f_ > tol) fail("eta'(0) = 0");
        if (std::abs(e1.d1) * t_f_ > tol) fail("eta'(t_f) = 0");
        if (std::abs(e0.d2) * t_f_ * t_f_ > tol) fail("eta''(0) = 0");
        if (std::abs(e1.d2) * t_f_ * t_f_ > tol) fail("eta''(t_f) = 0");
        if (convention_ == Phi0Convention::polynomial) {
            const Phi0Sample p0 = phi0_unchecked(0.0);
            const Phi0Sample p1 = phi0_unchecked(t_f_);
            const double scale = std::max({1.0, std::abs(E_i_), std::abs(E_f_)});
            if (std::abs(p0.value) > tol * scale * t_f_) fail("phi0(0) = 0");
            if (std::abs(p1.value) > tol * scale * t_f_) fail("phi0(t_f) = 0");
            if (std::abs(p0.d1 + E_i_) > tol * scale) fail("phi0'(0) = -E_i");
            if (std::abs(p1.d1 + E_f_) > tol * scale) fail("phi0'(t_f) = -E_f");
        }
    }

    Phi0Sample phi0_unchecked(double t) const {
        const double a = E_i_, b = E_f_;
        const double s = t / t_f_;
        return {t_f_ * (s * (1.0 - s) * ((a + b) * s - a)),
                -3.0 * (a + b) * s * s + 2.0 * (2.0 * a + b) * s - a};
    }

    double t_f_;
    double E_i_;
    double E_f_;
    EtaFn eta_fn_;
    Phi0Convention convention_;
};

}  // namespace trapmorph

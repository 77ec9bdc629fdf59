#include <doctest.h>

#include <cmath>

#include "trapmorph/grid.hpp"
#include "trapmorph/traps.hpp"

using namespace trapmorph;

namespace {

// ground energy of U = k|x| from the first zero of the Airy-function derivative
constexpr double kAiryPrimeRoot = 1.0187929716474071;

double linear_trap_ground_energy(double k) { return kAiryPrimeRoot * std::cbrt(k * k / 2.0); }

}  // namespace

TEST_CASE("analytic harmonic states: values, energies, nodes") {
    const Grid g(-12.0, 12.0, 1025);  // x = 0 is a sample
    const Eigenstate s0 = harmonic_eigenstate(1.0, 0, g);
    CHECK(s0.wave[512] == doctest::Approx(std::pow(M_PI, -0.25)).epsilon(1e-12));
    CHECK(s0.energy == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(detail::count_sign_changes(s0.wave.values) == 0);

    const Eigenstate s1 = harmonic_eigenstate(1.0, 1, g);
    CHECK(s1.wave[512] == 0.0);
    CHECK(s1.energy == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(detail::count_sign_changes(s1.wave.values) == 1);

    const Eigenstate soft = harmonic_eigenstate(1.0 / 3.0, 0, g);
    CHECK(soft.wave[512] == doctest::Approx(std::pow(3.0 * M_PI, -0.25)).epsilon(1e-12));
    CHECK(soft.wave[512] == doctest::Approx(0.570732).epsilon(1e-5));
    CHECK(soft.energy == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("frequency scaling identity of the ground state") {
    // psi_f(x) = xi^(1/4) psi_i(x sqrt(xi))
    const double xi = 1.0 / 3.0;
    const Grid g(-12.0, 12.0, 512);
    const Eigenstate soft = harmonic_eigenstate(xi, 0, g);
    for (int j = 0; j < g.n_points; j += 37) {
        const double x = g.x(j);
        const double expected =
            std::pow(xi, 0.25) * std::pow(M_PI, -0.25) * std::exp(-0.5 * xi * x * x);
        CHECK(soft.wave[j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("analytic states are normalized and orthogonal up to n = 20") {
    const Grid g(-16.0, 16.0, 2048);
    const Eigenstate a = harmonic_eigenstate(1.0, 20, g);
    CHECK(norm(a.wave) == doctest::Approx(1.0).epsilon(1e-10));
    const Eigenstate b = harmonic_eigenstate(1.0, 18, g);
    CHECK(std::abs(inner(a.wave, b.wave)) < 1e-10);
    CHECK(detail::count_sign_changes(a.wave.values) == 20);
}

TEST_CASE("analytic state requests are validated") {
    const Grid g(-12.0, 12.0, 256);
    CHECK_THROWS_AS(harmonic_eigenstate(1.0, 21, g), ConfigError);
    CHECK_THROWS_AS(harmonic_eigenstate(1.0, -1, g), ConfigError);
    CHECK_THROWS_AS(harmonic_eigenstate(0.0, 0, g), ConfigError);
}

TEST_CASE("stationary residual of analytic states against the 5-point Hamiltonian") {
    const Grid g(-12.0, 12.0, 2048);
    for (int n : {0, 1, 3, 5}) {
        const Eigenstate s = harmonic_eigenstate(1.0, n, g);
        const RealField d2 = second_derivative(s.wave);
        double num = 0.0, den = 0.0;
        for (int j = 2; j < g.n_points - 2; ++j) {
            const double r = -0.5 * d2[j] + (0.5 * g.x(j) * g.x(j) - s.energy) * s.wave[j];
            num += r * r;
            den += s.wave[j] * s.wave[j];
        }
        CHECK(std::sqrt(num / den) < 1e-6);
    }
}

TEST_CASE("numerical eigensolver reproduces the harmonic spectrum") {
    const Grid g(-12.0, 12.0, 2048);
    const auto out = solve_stationary(HarmonicTrap{1.0}, 6, g);
    for (int k = 0; k < 6; ++k) {
        CHECK(out.states[k].energy == doctest::Approx(k + 0.5).epsilon(2e-5));
        CHECK(out.states[k].node_count == k);
        CHECK(norm(out.states[k].wave) == doctest::Approx(1.0).epsilon(1e-10));
        if (k > 0) CHECK(out.states[k].energy > out.states[k - 1].energy);
    }
    CHECK_FALSE(out.edge_leakage);
}

TEST_CASE("numerical eigensolver matches the analytic eigenvector") {
    const Grid g(-12.0, 12.0, 1024);
    const auto out = solve_stationary(HarmonicTrap{1.0}, 2, g);
    const Eigenstate exact0 = harmonic_eigenstate(1.0, 0, g);
    const Eigenstate exact1 = harmonic_eigenstate(1.0, 1, g);
    CHECK(std::abs(inner(out.states[0].wave, exact0.wave)) == doctest::Approx(1.0).epsilon(1e-8));
    // sign convention: both are positive at the rightmost antinode
    CHECK(inner(out.states[1].wave, exact1.wave) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("numerical eigensolver: linear trap against the Airy oracle") {
    const Grid g(-12.0, 12.0, 1024);
    const auto out = solve_stationary(LinearTrap{1.5}, 1, g);
    CHECK(linear_trap_ground_energy(1.5) == doctest::Approx(1.0595874).epsilon(1e-6));
    CHECK(out.states[0].energy == doctest::Approx(linear_trap_ground_energy(1.5)).epsilon(1e-3));
}

TEST_CASE("numerical eigensolver: deep square well approximates a box") {
    const Grid g(-12.0, 12.0, 2048);
    RealField walls = RealField::sampled(g, [](double x) { return std::abs(x) <= 0.5 ? 0.0 : 1e6; });
    const auto out = solve_stationary(TabulatedTrap{walls}, 1, g);
    const double box = M_PI * M_PI / 2.0;
    CHECK(std::abs(out.states[0].energy - box) / box < 0.01);
}

TEST_CASE("unrefined 3-point solver converges at second order") {
    double errs[2];
    int idx = 0;
    for (int n : {513, 1025}) {
        const Grid g(-12.0, 12.0, n);
        const auto out = solve_stationary(HarmonicTrap{1.0}, 1, g, false);
        errs[idx++] = std::abs(out.states[0].energy - 0.5);
    }
    const double ratio = errs[0] / errs[1];
    CHECK(ratio > 3.2);
    CHECK(ratio < 4.8);
}

TEST_CASE("eigensolver flags edge leakage on a too-narrow box") {
    const Grid g(-3.0, 3.0, 64);
    const auto out = solve_stationary(HarmonicTrap{1.0}, 1, g);
    CHECK(out.edge_leakage);
}

TEST_CASE("eigensolver contract checks") {
    const Grid g(-12.0, 12.0, 256);
    CHECK_THROWS_AS(solve_stationary(HarmonicTrap{1.0}, 0, g), ConfigError);
    CHECK_THROWS_AS(solve_stationary(HarmonicTrap{-1.0}, 1, g), ConfigError);
    RealField bad = RealField::sampled(g, [](double) { return 0.0; });
    bad[10] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(solve_stationary(TabulatedTrap{bad}, 1, g), ConfigError);
}

TEST_CASE("lattice target: five equal sites") {
    const Grid g(-12.0, 12.0, 1024);
    const std::vector<double> centers{-1.5, -0.75, 0.0, 0.75, 1.5};
    const std::vector<double> weights{1.0, 1.0, 1.0, 1.0, 1.0};
    const auto out = lattice_target(centers, 64.0, weights, g);
    CHECK(norm(out.state.wave) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.state.node_count == 0);
    CHECK(out.state.energy == doctest::Approx(32.0).epsilon(1e-15));
    // five local maxima (a peak can straddle two equal samples on this grid)
    int maxima = 0;
    const auto& v = out.state.wave.values;
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    for (int j = 1; j + 1 < g.n_points; ++j)
        if (v[j] >= v[j - 1] && v[j] > v[j + 1] && v[j] > 1e-3 * peak) ++maxima;
    CHECK(maxima == 5);
    // adjacent-site overlap exp(-omega d^2 / 4) = exp(-9) exceeds the clean-separation bound
    CHECK(out.overlap_warning);
    CHECK(out.max_adjacent_overlap == doctest::Approx(std::exp(-9.0)).epsilon(1e-12));
}

TEST_CASE("lattice target degenerates to the single ground state") {
    const Grid g(-12.0, 12.0, 1024);
    const auto out = lattice_target({0.0}, 1.0, {1.0}, g);
    const Eigenstate exact = harmonic_eigenstate(1.0, 0, g);
    double dev = 0.0;
    for (int j = 0; j < g.n_points; ++j) dev = std::max(dev, std::abs(out.state.wave[j] - exact.wave[j]));
    CHECK(dev < 1e-12);
    CHECK_FALSE(out.overlap_warning);
}

TEST_CASE("lattice target: two distant sites have an empty midpoint") {
    const Grid g(-12.0, 12.0, 1025);
    const auto out = lattice_target({-3.0, 3.0}, 64.0, {1.0, 1.0}, g);
    CHECK(std::abs(out.state.wave[512]) < 1e-10);
    CHECK_FALSE(out.overlap_warning);
}

TEST_CASE("lattice parameters are validated") {
    const Grid g(-12.0, 12.0, 256);
    CHECK_THROWS_AS(lattice_target({1.0, 0.0}, 64.0, {1.0, 1.0}, g), ConfigError);   // not increasing
    CHECK_THROWS_AS(lattice_target({0.0, 1.0}, 64.0, {1.0, -1.0}, g), ConfigError);  // bad weight
    CHECK_THROWS_AS(lattice_target({0.0}, -1.0, {1.0}, g), ConfigError);             // bad frequency
}

TEST_CASE("trap evaluation: kinds and the implicit lattice potential") {
    CHECK(evaluate(HarmonicTrap{2.0}, 1.5) == doctest::Approx(4.5).epsilon(1e-15));
    CHECK(evaluate(LinearTrap{1.5}, -2.0) == doctest::Approx(3.0).epsilon(1e-15));
    // near a site the implicit lattice potential is the local harmonic well
    // (up to the exponentially small ridge correction from the neighbors)
    const LatticeTrap lat{{-1.5, -0.75, 0.0, 0.75, 1.5}, 64.0, {1.0, 1.0, 1.0, 1.0, 1.0}};
    const double w2 = 64.0 * 64.0;
    CHECK(evaluate(TrapPotential{lat}, 0.01) ==
          doctest::Approx(0.5 * w2 * 0.01 * 0.01).epsilon(5e-4));
    // far tail is dominated by the nearest site and stays finite
    CHECK(std::isfinite(evaluate(TrapPotential{lat}, 12.0)));
    CHECK(evaluate(TrapPotential{lat}, 12.0) > 1e4);
}

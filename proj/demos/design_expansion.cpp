// Minimal library walkthrough: design the trap movie that opens a harmonic
// trap from omega = 1 to omega = 1/3 in under a quarter period, then verify
// the transfer by propagating the ground state through it.

#include <cstdio>

#include "trapmorph/trapmorph.hpp"

int main() {
    using namespace trapmorph;

    const Grid grid(-12.0, 12.0, 1024, /*require_power_of_two=*/true);
    const Eigenstate psi_i = harmonic_eigenstate(1.0, 0, grid);
    const Eigenstate psi_f = harmonic_eigenstate(1.0 / 3.0, 0, grid);

    const double t_f = 0.48 * M_PI;
    const StatePair pair = make_state_pair(psi_i, psi_f, InterpolationMode::positive_modulus);
    const Schedule schedule = Schedule::quintic(t_f, pair.E_i, pair.E_f);

    DesignInput input{grid, pair, schedule};
    input.n_t = 2000;
    const DesignedProtocol protocol = design(input);

    PropagationConfig cfg;
    cfg.dt = 1e-3;
    cfg.potential = MoviePotential{&protocol};
    cfg.fidelity_target = ComplexWave::from_real(psi_f.wave);
    const EvolutionResult result = propagate(ComplexWave::from_real(psi_i.wave), cfg, t_f);

    std::printf("expansion in t_f = %.4f\n", t_f);
    std::printf("  endpoint overlap S  = %.6f\n", protocol.S_overlap);
    std::printf("  transfer fidelity   = %.8f\n", result.fidelity.value_or(0.0));
    std::printf("  norm drift          = %.3e\n", result.norm_drift);
    return 0;
}

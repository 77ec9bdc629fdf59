#pragma once

// Umbrella header: inverse-engineering of time-dependent 1D trap potentials
// that drive a quantum particle between prescribed stationary states in an
// arbitrary finite time, verified by split-operator propagation.

#include "trapmorph/designer.hpp"
#include "trapmorph/errors.hpp"
#include "trapmorph/fft.hpp"
#include "trapmorph/grid.hpp"
#include "trapmorph/propagator.hpp"
#include "trapmorph/runner.hpp"
#include "trapmorph/scenario.hpp"
#include "trapmorph/schedule.hpp"
#include "trapmorph/traps.hpp"

#pragma once

#include "nvspin/constants.hpp"
#include "nvspin/dynamics.hpp"
#include "nvspin/lattice.hpp"

namespace nvspin {

struct OracleOptions {
  int max_bath_spins = 12;   // 3 * 2^12 = 12288 is the largest dense problem
  double substep_ns = 1.0;   // propagator step used to build the grid stepper
};

/// Ground-truth survival probability of the electron |0> state for the FULL
/// bath, computed by time-stepped propagation (Pade exponential of the
/// substep, composed to the grid spacing) of every bath basis state.
/// Averaging those pure-state survivals equals evolving the maximally mixed
/// bath density matrix, by linearity of the trace. This path shares the
/// Hamiltonian builders with the engine but none of the propagation code.
SurvivalCurve exact_survival(const SpinBath& bath, double bz_tesla, const TimeGrid& grid,
                             const PhysicalConstants& pc = {}, const OracleOptions& opts = {});

}  // namespace nvspin

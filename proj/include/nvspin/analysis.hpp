#pragma once

#include <span>
#include <vector>

#include "nvspin/cce.hpp"
#include "nvspin/constants.hpp"
#include "nvspin/dynamics.hpp"
#include "nvspin/lattice.hpp"

namespace nvspin {

/// Result of the exponential-decay fit P(t) = P_inf + (1 - P_inf) e^{-t/T1}.
struct T1Fit {
  double t1_us = 0.0;        // decay time constant of the fitted model
  double baseline = 0.0;     // fitted P_inf
  double amplitude = 0.0;    // 1 - P_inf
  double rms_residual = 0.0;
  bool converged = false;

  /// Initial population-loss rate of the fitted model, amplitude / T1.
  /// Zero for non-decaying curves (the fit's "1/T1" readout); equals 1/T1
  /// whenever the baseline is zero.
  double rate_per_us() const;
};

/// Deterministic least-squares fit with P_inf and T1 free. Initialization:
/// P_inf from the final sample, T1 from the first 1/e crossing (grid
/// midpoint when the curve never crosses). Oscillatory curves converge to
/// an envelope fit with a large residual and are flagged, not hidden.
T1Fit fit_t1(const SurvivalCurve& curve);

/// The two solutions of |D + gamma_e Bz| = gamma_c Bz in (0, 2000) G,
/// bracketing the |0> <-> |-1> level anticrossing. The upper root is the
/// electron-nuclear flip-flop resonance.
struct ResonanceRoots {
  double low_gauss = 0.0;
  double high_gauss = 0.0;
};
ResonanceRoots resonance_field(const PhysicalConstants& pc = {});

struct SweepRow {
  double bz_gauss = 0.0;
  T1Fit fit;
  bool fit_failed = false;  // fit threw; row kept, sweep continued
};

/// Runs cce_survival + fit_t1 for every field (gauss), rows in input order.
std::vector<SweepRow> field_sweep(const SpinBath& bath, int order,
                                  std::span<const double> fields_gauss, const TimeGrid& grid,
                                  const PhysicalConstants& pc = {}, CceOptions options = {});

}  // namespace nvspin

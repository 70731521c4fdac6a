#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "nvspin/constants.hpp"

namespace nvspin {

/// Uniform time grid starting at t = 0 (us).
struct TimeGrid {
  double t_start_us = 0.0;  // fixed at 0 by contract
  double t_end_us = 20.0;
  int n_points = 1001;

  static TimeGrid uniform(double t_end_us, int n_points);

  double dt() const { return n_points > 1 ? t_end_us / (n_points - 1) : 0.0; }
  double t(int i) const { return i * dt(); }
  std::vector<double> samples() const;
  void validate() const;

  bool operator==(const TimeGrid&) const = default;
};

struct CurveMeta {
  std::string method;   // "cce" or "exact"
  int order = 0;        // CCE truncation order (0 for exact)
  std::string bath_id;
  double bz_gauss = 0.0;
  std::size_t cluster_count = 0;
  std::size_t degraded_count = 0;
};

/// Survival probability samples P(t) on a shared grid.
struct SurvivalCurve {
  TimeGrid grid;
  std::vector<double> values;
  CurveMeta meta;
};

/// rho(0) = |0><0| (x) 1/2^k on k bath spins. Dimension 3*2^k, trace 1.
Eigen::MatrixXcd initial_cluster_state(int k);

/// Projector |0><0| (x) identity on the bath, dimension 3*2^k.
Eigen::MatrixXcd survival_projector(int k);

/// P(t) = Tr[rho(0) e^{iHt} (|0><0| (x) 1) e^{-iHt}] for a cluster
/// Hamiltonian of dimension 3*2^k, evaluated from one eigendecomposition
/// reused across the whole grid. Throws ContractError for non-hermitian
/// input or out-of-range probabilities.
SurvivalCurve evolve_survival(const Eigen::MatrixXcd& h_cluster, const TimeGrid& grid);

/// Max |Tr(rho_NV e^{iH_NV t}|0><0|e^{-iH_NV t}) - 1| over the grid. The
/// correlation denominators reduce to this quantity, which the contract
/// pins below 1e-12, so production code divides by nothing.
double denominator_check(double bz_tesla, const TimeGrid& grid, const PhysicalConstants& pc = {});

}  // namespace nvspin

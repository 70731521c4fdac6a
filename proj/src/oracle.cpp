#include "nvspin/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "nvspin/errors.hpp"
#include "nvspin/hamiltonian.hpp"

namespace nvspin {

SurvivalCurve exact_survival(const SpinBath& bath, double bz_tesla, const TimeGrid& grid,
                             const PhysicalConstants& pc, const OracleOptions& opts) {
  grid.validate();
  const int n = bath.size();
  if (n > opts.max_bath_spins)
    throw CapacityError("exact propagation supports at most " +
                        std::to_string(opts.max_bath_spins) + " bath spins, got " +
                        std::to_string(n));

  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  const Eigen::MatrixXcd h = cluster_hamiltonian(bath, all, bz_tesla, pc);

  const Eigen::Index bd = Eigen::Index{1} << n;
  const Eigen::Index dim = 3 * bd;

  SurvivalCurve curve;
  curve.grid = grid;
  curve.values.assign(static_cast<std::size_t>(grid.n_points), 1.0);
  curve.meta.method = "exact";
  curve.meta.bath_id = bath.id();
  curve.meta.bz_gauss = bz_tesla / kGaussToTesla;
  if (grid.n_points == 1) return curve;

  // Grid stepper assembled from substeps of at most substep_ns.
  const double dt = grid.dt();
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / (opts.substep_ns * 1e-3))));
  const std::complex<double> mi{0.0, -1.0};
  Eigen::MatrixXcd u_sub = (mi * (dt / substeps) * h).exp();
  Eigen::MatrixXcd u_grid = Eigen::MatrixXcd::Identity(dim, dim);
  {
    // binary powering of the substep propagator
    int e = substeps;
    Eigen::MatrixXcd base = std::move(u_sub);
    while (e > 0) {
      if (e & 1) u_grid = u_grid * base;
      e >>= 1;
      if (e > 0) base = base * base;
    }
  }

  // One column per bath basis state, all starting in the electron |0> block.
  Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(dim, bd);
  for (Eigen::Index b = 0; b < bd; ++b) psi(bd + b, b) = 1.0;

  const double inv_bd = 1.0 / static_cast<double>(bd);
  for (int i = 1; i < grid.n_points; ++i) {
    psi = (u_grid * psi).eval();
    curve.values[static_cast<std::size_t>(i)] =
        psi.middleRows(bd, bd).squaredNorm() * inv_bd;
  }
  return curve;
}

}  // namespace nvspin

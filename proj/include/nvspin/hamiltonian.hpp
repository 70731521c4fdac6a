#pragma once

#include <Eigen/Core>
#include <span>

#include "nvspin/constants.hpp"
#include "nvspin/lattice.hpp"

namespace nvspin {

/// 3x3 real symmetric traceless coupling tensor in rad/us.
struct CouplingTensor {
  Eigen::Matrix3d m;

  double max_abs() const { return m.cwiseAbs().maxCoeff(); }
};

/// Spin matrices: electron spin-1 in the ordered basis (|+1>, |0>, |-1>),
/// nucleus spin-1/2 in (|up>, |down>). Dimensionless.
struct SpinOperators {
  static const std::array<Eigen::Matrix3cd, 3>& electron();  // Sx, Sy, Sz
  static const std::array<Eigen::Matrix2cd, 3>& nuclear();   // Ix, Iy, Iz
};

/// Point-dipole tensor (mu0 * ga * gb * hbar / 4 pi r^3) (1 - 3 rr^T),
/// promoted to angular-frequency units (rad/us). r in nm.
CouplingTensor dipolar_tensor(const Eigen::Vector3d& r_nm, double gamma_a_rad_s_t,
                              double gamma_b_rad_s_t, const PhysicalConstants& pc = {});

/// Electron-nucleus hyperfine tensor: dipolar_tensor(r, gamma_c, gamma_e).
CouplingTensor hyperfine_tensor(const Eigen::Vector3d& r_nm, const PhysicalConstants& pc = {});

/// D Sz^2 - gamma_e Bz Sz, diagonal in (|+1>, |0>, |-1>). rad/us.
Eigen::Matrix3cd nv_hamiltonian(double bz_tesla, const PhysicalConstants& pc = {});

/// Term toggles used by decoupling tests and diagnostics.
struct HamiltonianOptions {
  bool include_hyperfine = true;
  bool include_bath_dipolar = true;
};

/// Hamiltonian of the electron plus the given bath spins, dimension 3*2^k,
/// basis ordered electron first then bath spins by ascending cluster
/// position. Cluster indices must be valid for the bath and duplicate-free.
Eigen::MatrixXcd cluster_hamiltonian(const SpinBath& bath, std::span<const int> cluster,
                                     double bz_tesla, const PhysicalConstants& pc = {},
                                     const HamiltonianOptions& opts = {});

/// Relative hermiticity defect ||H - H^dagger|| / max(1, ||H||) (Frobenius).
double hermiticity_defect(const Eigen::MatrixXcd& h);

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace nvspin

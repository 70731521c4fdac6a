#include "nvspin/hamiltonian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nvspin/errors.hpp"

namespace nvspin {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
}

const std::array<Eigen::Matrix3cd, 3>& SpinOperators::electron() {
  static const auto ops = [] {
    const double s = 1.0 / std::numbers::sqrt2;
    std::array<Eigen::Matrix3cd, 3> o;
    o[0] << 0, s, 0, s, 0, s, 0, s, 0;
    o[1] << 0, -kI * s, 0, kI * s, 0, -kI * s, 0, kI * s, 0;
    o[2] << 1, 0, 0, 0, 0, 0, 0, 0, -1;
    return o;
  }();
  return ops;
}

const std::array<Eigen::Matrix2cd, 3>& SpinOperators::nuclear() {
  static const auto ops = [] {
    std::array<Eigen::Matrix2cd, 3> o;
    o[0] << 0, 0.5, 0.5, 0;
    o[1] << 0, -0.5 * kI, 0.5 * kI, 0;
    o[2] << 0.5, 0, 0, -0.5;
    return o;
  }();
  return ops;
}

CouplingTensor dipolar_tensor(const Eigen::Vector3d& r_nm, double gamma_a_rad_s_t,
                              double gamma_b_rad_s_t, const PhysicalConstants& pc) {
  const double r = r_nm.norm();
  if (!(r > 0.0)) throw std::invalid_argument("dipolar tensor is singular at r = 0");
  const double r_m = r * 1e-9;
  const double prefactor_rad_s = pc.mu0_t_m_a * gamma_a_rad_s_t * gamma_b_rad_s_t * pc.hbar_j_s /
                                 (4.0 * std::numbers::pi * r_m * r_m * r_m);
  const Eigen::Vector3d rhat = r_nm / r;
  CouplingTensor t;
  t.m = prefactor_rad_s * kRadPerSecToRadPerUs *
        (Eigen::Matrix3d::Identity() - 3.0 * rhat * rhat.transpose());
  return t;
}

CouplingTensor hyperfine_tensor(const Eigen::Vector3d& r_nm, const PhysicalConstants& pc) {
  return dipolar_tensor(r_nm, pc.gamma_c_rad_s_t, pc.gamma_e_rad_s_t, pc);
}

Eigen::Matrix3cd nv_hamiltonian(double bz_tesla, const PhysicalConstants& pc) {
  const double d = pc.d_rad_us();
  const double zeeman = pc.gamma_e_rad_us_t() * bz_tesla;
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(0, 0) = d - zeeman;  // |+1>
  h(2, 2) = d + zeeman;  // |-1>
  return h;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double hermiticity_defect(const Eigen::MatrixXcd& h) {
  const double scale = std::max(1.0, h.norm());
  return (h - h.adjoint()).norm() / scale;
}

Eigen::MatrixXcd cluster_hamiltonian(const SpinBath& bath, std::span<const int> cluster,
                                     double bz_tesla, const PhysicalConstants& pc,
                                     const HamiltonianOptions& opts) {
  const int k = static_cast<int>(cluster.size());
  for (int j = 0; j < k; ++j) {
    const int idx = cluster[j];
    if (idx < 0 || idx >= bath.size())
      throw std::invalid_argument("cluster index " + std::to_string(idx) + " out of range");
    for (int l = j + 1; l < k; ++l)
      if (cluster[l] == idx)
        throw std::invalid_argument("duplicate cluster index " + std::to_string(idx));
  }

  const Eigen::Index bath_dim = Eigen::Index{1} << k;
  const Eigen::Index dim = 3 * bath_dim;

  // Bath-space embeddings of Ix, Iy, Iz for each cluster member.
  const auto& nuc = SpinOperators::nuclear();
  std::vector<std::array<Eigen::MatrixXcd, 3>> embedded(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const Eigen::MatrixXcd left = Eigen::MatrixXcd::Identity(Eigen::Index{1} << j,
                                                             Eigen::Index{1} << j);
    const Eigen::Index right_dim = Eigen::Index{1} << (k - j - 1);
    const Eigen::MatrixXcd right = Eigen::MatrixXcd::Identity(right_dim, right_dim);
    for (int c = 0; c < 3; ++c)
      embedded[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] =
          kron(kron(left, nuc[static_cast<std::size_t>(c)]), right);
  }

  // Pure bath part: nuclear Zeeman plus intra-bath dipolar couplings.
  Eigen::MatrixXcd bath_part = Eigen::MatrixXcd::Zero(bath_dim, bath_dim);
  const double nuc_zeeman = pc.gamma_c_rad_us_t() * bz_tesla;
  for (int j = 0; j < k; ++j) bath_part -= nuc_zeeman * embedded[static_cast<std::size_t>(j)][2];
  if (opts.include_bath_dipolar) {
    for (int j = 0; j < k; ++j) {
      for (int l = j + 1; l < k; ++l) {
        const Eigen::Vector3d r_jl =
            bath.positions[static_cast<std::size_t>(cluster[l])] -
            bath.positions[static_cast<std::size_t>(cluster[j])];
        const CouplingTensor d = dipolar_tensor(r_jl, pc.gamma_c_rad_s_t, pc.gamma_c_rad_s_t, pc);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            bath_part += d.m(a, b) * (embedded[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)] *
                                      embedded[static_cast<std::size_t>(l)][static_cast<std::size_t>(b)]);
      }
    }
  }

  const Eigen::MatrixXcd bath_id = Eigen::MatrixXcd::Identity(bath_dim, bath_dim);
  Eigen::MatrixXcd h = kron(nv_hamiltonian(bz_tesla, pc), bath_id) +
                       kron(Eigen::Matrix3cd::Identity(), bath_part);

  // Hyperfine: sum_j S . A_j . I_j, assembled as kron(S_a, A_ab I_b).
  if (opts.include_hyperfine) {
    const auto& ele = SpinOperators::electron();
    for (int a = 0; a < 3; ++a) {
      Eigen::MatrixXcd bath_acc = Eigen::MatrixXcd::Zero(bath_dim, bath_dim);
      for (int j = 0; j < k; ++j) {
        const CouplingTensor A =
            hyperfine_tensor(bath.positions[static_cast<std::size_t>(cluster[j])], pc);
        for (int b = 0; b < 3; ++b)
          bath_acc += A.m(a, b) * embedded[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
      }
      h += kron(ele[static_cast<std::size_t>(a)], bath_acc);
    }
  }

  if (hermiticity_defect(h) > 1e-12)
    throw ContractError("assembled cluster Hamiltonian is not hermitian");
  (void)dim;
  return h;
}

}  // namespace nvspin

#include "nvspin/dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "nvspin/errors.hpp"
#include "nvspin/hamiltonian.hpp"

namespace nvspin {

TimeGrid TimeGrid::uniform(double t_end_us, int n_points) {
  TimeGrid g{0.0, t_end_us, n_points};
  g.validate();
  return g;
}

void TimeGrid::validate() const {
  if (t_start_us != 0.0) throw std::invalid_argument("time grid must start at t = 0");
  if (n_points < 1) throw std::invalid_argument("time grid needs at least one point");
  if (n_points == 1) {
    if (t_end_us != 0.0)
      throw std::invalid_argument("a single-point grid must sit at t = 0");
  } else if (!(t_end_us > 0.0)) {
    throw std::invalid_argument("t_end must be positive");
  }
}

std::vector<double> TimeGrid::samples() const {
  std::vector<double> s(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) s[static_cast<std::size_t>(i)] = t(i);
  return s;
}

namespace {

int bath_spins_for_dim(Eigen::Index dim) {
  int k = 0;
  Eigen::Index d = 3;
  while (d < dim) {
    d *= 2;
    ++k;
  }
  if (d != dim) throw ContractError("operator dimension is not 3*2^k");
  return k;
}

}  // namespace

Eigen::MatrixXcd survival_projector(int k) {
  if (k < 0) throw std::invalid_argument("negative bath size");
  const Eigen::Index bd = Eigen::Index{1} << k;
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(3 * bd, 3 * bd);
  p.block(bd, bd, bd, bd) = Eigen::MatrixXcd::Identity(bd, bd);
  return p;
}

Eigen::MatrixXcd initial_cluster_state(int k) {
  const Eigen::Index bd = Eigen::Index{1} << k;
  return survival_projector(k) / static_cast<double>(bd);
}

SurvivalCurve evolve_survival(const Eigen::MatrixXcd& h_cluster, const TimeGrid& grid) {
  grid.validate();
  if (h_cluster.rows() != h_cluster.cols())
    throw ContractError("cluster Hamiltonian must be square");
  if (hermiticity_defect(h_cluster) > 1e-12)
    throw ContractError("cluster Hamiltonian is not hermitian");
  const int k = bath_spins_for_dim(h_cluster.rows());
  const Eigen::Index bd = Eigen::Index{1} << k;
  const Eigen::Index dim = h_cluster.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h_cluster);
  if (es.info() != Eigen::Success) throw ContractError("eigendecomposition failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();

  // Q = V^dagger P0 V with P0 the electron-|0> projector. Since
  // rho(0) = P0 / 2^k, the survival reduces to
  //   P(t) = 2^-k [ sum_m Q_mm^2 + 2 sum_{m<n} |Q_mn|^2 cos((l_n - l_m) t) ].
  const Eigen::MatrixXcd block = es.eigenvectors().middleRows(bd, bd);
  const Eigen::MatrixXcd q = block.adjoint() * block;

  double constant = 0.0;
  std::vector<double> weight;
  std::vector<double> freq;
  weight.reserve(static_cast<std::size_t>(dim) * (static_cast<std::size_t>(dim) - 1) / 2);
  freq.reserve(weight.capacity());
  for (Eigen::Index m = 0; m < dim; ++m) {
    constant += std::norm(q(m, m));
    for (Eigen::Index n = m + 1; n < dim; ++n) {
      weight.push_back(2.0 * std::norm(q(m, n)));
      freq.push_back(lambda(n) - lambda(m));
    }
  }

  SurvivalCurve curve;
  curve.grid = grid;
  curve.values.assign(static_cast<std::size_t>(grid.n_points), 0.0);
  const double inv_bd = 1.0 / static_cast<double>(bd);
  const std::size_t np = weight.size();
  const double dt = grid.dt();

  // Phase recurrence over the uniform grid: one complex multiply per pair
  // per point instead of a cos() call.
  std::vector<std::complex<double>> phase(np, {1.0, 0.0});
  std::vector<std::complex<double>> step(np);
  for (std::size_t p = 0; p < np; ++p)
    step[p] = std::complex<double>(std::cos(freq[p] * dt), std::sin(freq[p] * dt));

  for (int i = 0; i < grid.n_points; ++i) {
    double acc = constant;
    for (std::size_t p = 0; p < np; ++p) {
      acc += weight[p] * phase[p].real();
      phase[p] *= step[p];
    }
    const double v = acc * inv_bd;
    if (v < -1e-10 || v > 1.0 + 1e-10)
      throw ContractError("survival probability " + std::to_string(v) + " out of [0,1]");
    curve.values[static_cast<std::size_t>(i)] = v;
  }
  return curve;
}

double denominator_check(double bz_tesla, const TimeGrid& grid, const PhysicalConstants& pc) {
  grid.validate();
  const Eigen::Matrix3cd h = nv_hamiltonian(bz_tesla, pc);
  Eigen::Vector3cd zero_state = Eigen::Vector3cd::Zero();
  zero_state(1) = 1.0;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h);
  const Eigen::Vector3cd coeff = es.eigenvectors().adjoint() * zero_state;

  double worst = 0.0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double t = grid.t(i);
    Eigen::Vector3cd evolved;
    for (int m = 0; m < 3; ++m)
      evolved(m) = std::polar(1.0, -es.eigenvalues()(m) * t) * coeff(m);
    const std::complex<double> amp = (es.eigenvectors() * evolved).dot(zero_state);
    worst = std::max(worst, std::abs(std::norm(amp) - 1.0));
  }
  return worst;
}

}  // namespace nvspin

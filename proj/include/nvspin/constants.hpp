#pragma once

#include <numbers>

namespace nvspin {

// Internal working units: time in us, energies/couplings in rad/us,
// positions in nm, magnetic field in tesla (gauss only at the CLI boundary).
inline constexpr double kGaussToTesla = 1e-4;
inline constexpr double kRadPerSecToRadPerUs = 1e-6;

/// Physical constants of the NV + 13C system. All rates are angular
/// frequencies (rad/s); converters below produce the internal rad/us scale.
struct PhysicalConstants {
  double zero_field_splitting_rad_s = 2.0 * std::numbers::pi * 2.87e9;
  double gamma_e_rad_s_t = -1.76e11;  // electron gyromagnetic ratio
  double gamma_c_rad_s_t = 6.73e7;    // 13C gyromagnetic ratio
  double mu0_t_m_a = 4.0 * std::numbers::pi * 1e-7;
  double hbar_j_s = 1.054571817e-34;

  double d_rad_us() const { return zero_field_splitting_rad_s * kRadPerSecToRadPerUs; }
  double gamma_e_rad_us_t() const { return gamma_e_rad_s_t * kRadPerSecToRadPerUs; }
  double gamma_c_rad_us_t() const { return gamma_c_rad_s_t * kRadPerSecToRadPerUs; }

  /// Throws std::invalid_argument when a sign/positivity constraint is broken.
  void validate() const;
};

}  // namespace nvspin

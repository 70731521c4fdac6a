#include "nvspin/constants.hpp"

#include <stdexcept>

namespace nvspin {

void PhysicalConstants::validate() const {
  if (!(zero_field_splitting_rad_s > 0.0))
    throw std::invalid_argument("zero-field splitting must be positive");
  if (!(gamma_e_rad_s_t < 0.0))
    throw std::invalid_argument("electron gyromagnetic ratio must be negative");
  if (!(gamma_c_rad_s_t > 0.0))
    throw std::invalid_argument("13C gyromagnetic ratio must be positive");
  if (!(mu0_t_m_a > 0.0) || !(hbar_j_s > 0.0))
    throw std::invalid_argument("mu0 and hbar must be positive");
}

}  // namespace nvspin

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nvspin {

/// Generation parameters for a random 13C bath on the diamond lattice.
struct LatticeConfig {
  double lattice_constant_nm = 0.3567;
  double shell_radius_nm = 4.0;      // outer cutoff for candidate sites
  double exclusion_radius_nm = 0.5;  // minimum NV-nucleus distance
  double abundance = 0.011;          // independent occupation probability
  std::optional<int> max_spins = 50; // keep this many nearest spins; nullopt = unbounded
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

/// NV at the origin plus 13C positions (nm) expressed in the NV frame
/// (crystal [111] mapped to +z). Positions are sorted by ascending distance.
struct SpinBath {
  std::vector<Eigen::Vector3d> positions;
  std::uint64_t seed = 0;
  LatticeConfig config;
  double field_bz_tesla = 0.0;  // provenance only; runs pass Bz explicitly

  int size() const { return static_cast<int>(positions.size()); }
  std::string id() const;

  /// Bath made of the k spins nearest to the NV (positions are pre-sorted).
  SpinBath nearest_subset(int k) const;

  void validate() const;  // throws ParseError on invariant violations
};

/// All carbon sites of the diamond structure with exclusion <= |r| <= shell,
/// in the NV frame, sorted by (distance, x, y, z). The origin (vacancy) and
/// the adjacent nitrogen site are excluded. Deterministic, seed-independent.
/// Throws CapacityError when the site count would exceed the hard cap.
std::vector<Eigen::Vector3d> generate_sites(const LatticeConfig& config);

inline constexpr std::size_t kMaxLatticeSites = 4'000'000;

/// Occupies each candidate site independently with probability `abundance`
/// using a generator seeded from config.seed; same config -> identical bath.
SpinBath sample_bath(const LatticeConfig& config);

void save_bath(const SpinBath& bath, const std::filesystem::path& path);
SpinBath load_bath(const std::filesystem::path& path);

}  // namespace nvspin

#include "nvspin/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "nvspin/constants.hpp"
#include "nvspin/errors.hpp"

namespace nvspin {

namespace {

// Rotation taking the crystal [111] direction to the simulation +z axis.
// Rows are the NV-frame basis vectors expressed in cubic coordinates.
Eigen::Matrix3d nv_frame_rotation() {
  Eigen::Matrix3d r;
  r.row(0) = Eigen::Vector3d(1, -1, 0).normalized();
  r.row(1) = Eigen::Vector3d(1, 1, -2).normalized();
  r.row(2) = Eigen::Vector3d(1, 1, 1).normalized();
  return r;
}

// 53-bit uniform in [0,1); avoids the implementation-defined layout of
// std::uniform_real_distribution so baths reproduce across toolchains.
double next_uniform(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void LatticeConfig::validate() const {
  if (!(lattice_constant_nm > 0.0))
    throw std::invalid_argument("lattice constant must be positive");
  if (abundance < 0.0 || abundance > 1.0)
    throw std::invalid_argument("abundance must lie in [0,1]");
  if (!(exclusion_radius_nm < shell_radius_nm))
    throw std::invalid_argument("exclusion radius must be smaller than shell radius");
  if (exclusion_radius_nm < 0.0)
    throw std::invalid_argument("exclusion radius must be non-negative");
  if (max_spins && *max_spins < 0)
    throw std::invalid_argument("max_spins must be non-negative");
}

std::vector<Eigen::Vector3d> generate_sites(const LatticeConfig& config) {
  config.validate();
  const double a = config.lattice_constant_nm;
  const double shell = config.shell_radius_nm;
  const double excl = config.exclusion_radius_nm;

  // Volumetric estimate (8 atoms per conventional cell) so absurd shells
  // fail before enumeration.
  const double density = 8.0 / (a * a * a);
  const double estimate = density * (4.0 / 3.0) * std::numbers::pi * shell * shell * shell;
  if (estimate > static_cast<double>(kMaxLatticeSites))
    throw CapacityError("shell radius " + fmt_g17(shell) + " nm implies ~" +
                        std::to_string(static_cast<std::size_t>(estimate)) +
                        " sites, above the cap of " + std::to_string(kMaxLatticeSites));

  // Diamond structure: fcc lattice with a two-atom basis, 8 atoms per
  // conventional cubic cell.
  static constexpr std::array<std::array<double, 3>, 8> kBasis = {{
      {0.00, 0.00, 0.00}, {0.00, 0.50, 0.50}, {0.50, 0.00, 0.50}, {0.50, 0.50, 0.00},
      {0.25, 0.25, 0.25}, {0.25, 0.75, 0.75}, {0.75, 0.25, 0.75}, {0.75, 0.75, 0.25},
  }};

  const Eigen::Matrix3d rot = nv_frame_rotation();
  const Eigen::Vector3d nitrogen_cubic(0.25 * a, 0.25 * a, 0.25 * a);
  const int span = static_cast<int>(std::ceil(shell / a)) + 1;

  std::vector<Eigen::Vector3d> sites;
  for (int nx = -span; nx <= span; ++nx) {
    for (int ny = -span; ny <= span; ++ny) {
      for (int nz = -span; nz <= span; ++nz) {
        for (const auto& b : kBasis) {
          const Eigen::Vector3d p_cubic(a * (nx + b[0]), a * (ny + b[1]), a * (nz + b[2]));
          const double r = p_cubic.norm();
          if (r < 1e-12) continue;  // vacancy site (origin)
          if ((p_cubic - nitrogen_cubic).cwiseAbs().maxCoeff() < 1e-9 * a)
            continue;  // nitrogen site
          if (r < excl || r > shell) continue;
          sites.emplace_back(rot * p_cubic);
          if (sites.size() > kMaxLatticeSites)
            throw CapacityError("site count exceeds the cap of " +
                                std::to_string(kMaxLatticeSites));
        }
      }
    }
  }

  std::sort(sites.begin(), sites.end(), [](const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    const double du = u.norm(), dv = v.norm();
    if (du != dv) return du < dv;
    if (u.x() != v.x()) return u.x() < v.x();
    if (u.y() != v.y()) return u.y() < v.y();
    return u.z() < v.z();
  });
  return sites;
}

SpinBath sample_bath(const LatticeConfig& config) {
  const auto sites = generate_sites(config);
  std::mt19937_64 eng(config.seed);

  SpinBath bath;
  bath.seed = config.seed;
  bath.config = config;
  for (const auto& site : sites) {
    if (next_uniform(eng) < config.abundance) bath.positions.push_back(site);
  }
  if (config.max_spins && static_cast<int>(bath.positions.size()) > *config.max_spins)
    bath.positions.resize(static_cast<std::size_t>(*config.max_spins));
  return bath;
}

std::string SpinBath::id() const {
  return "seed" + std::to_string(seed) + "-n" + std::to_string(positions.size());
}

SpinBath SpinBath::nearest_subset(int k) const {
  if (k < 0 || k > size()) throw std::invalid_argument("subset size out of range");
  SpinBath sub = *this;
  sub.positions.assign(positions.begin(), positions.begin() + k);
  sub.config.max_spins = k;
  return sub;
}

void SpinBath::validate() const {
  double prev = -1.0;
  std::set<std::array<double, 3>> seen;
  for (const auto& p : positions) {
    const double r = p.norm();
    if (r < config.exclusion_radius_nm)
      throw ParseError("bath spin at distance " + fmt_g17(r) +
                       " nm violates the exclusion radius " +
                       fmt_g17(config.exclusion_radius_nm) + " nm");
    if (r < prev) throw ParseError("bath positions are not sorted by distance");
    prev = r;
    if (!seen.insert({p.x(), p.y(), p.z()}).second)
      throw ParseError("duplicate bath position (" + fmt_g17(p.x()) + ", " +
                       fmt_g17(p.y()) + ", " + fmt_g17(p.z()) + ")");
  }
}

void save_bath(const SpinBath& bath, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  out << "nvspin-bath v1\n";
  out << "seed " << bath.seed << "\n";
  out << "lattice_constant_nm " << fmt_g17(bath.config.lattice_constant_nm) << "\n";
  out << "shell_radius_nm " << fmt_g17(bath.config.shell_radius_nm) << "\n";
  out << "exclusion_radius_nm " << fmt_g17(bath.config.exclusion_radius_nm) << "\n";
  out << "abundance " << fmt_g17(bath.config.abundance) << "\n";
  if (bath.config.max_spins)
    out << "max_spins " << *bath.config.max_spins << "\n";
  else
    out << "max_spins unbounded\n";
  out << "field_bz_gauss " << fmt_g17(bath.field_bz_tesla / kGaussToTesla) << "\n";
  out << "spins " << bath.positions.size() << "\n";
  for (std::size_t i = 0; i < bath.positions.size(); ++i) {
    const auto& p = bath.positions[i];
    out << i << " " << fmt_g17(p.x()) << " " << fmt_g17(p.y()) << " " << fmt_g17(p.z()) << "\n";
  }
  if (!out) throw std::ios_base::failure("write to " + path.string() + " failed");
}

SpinBath load_bath(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "nvspin-bath v1")
    throw ParseError(path.string() + ": missing or unsupported format tag");

  SpinBath bath;
  std::size_t declared = 0;
  bool have_count = false;
  auto need = [&](std::istringstream& s, const char* what) {
    if (s.fail()) throw ParseError(path.string() + ": malformed " + std::string(what));
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream s(line);
    std::string key;
    s >> key;
    if (key == "seed") {
      s >> bath.seed;
      need(s, "seed");
      bath.config.seed = bath.seed;
    } else if (key == "lattice_constant_nm") {
      s >> bath.config.lattice_constant_nm;
      need(s, "lattice constant");
    } else if (key == "shell_radius_nm") {
      s >> bath.config.shell_radius_nm;
      need(s, "shell radius");
    } else if (key == "exclusion_radius_nm") {
      s >> bath.config.exclusion_radius_nm;
      need(s, "exclusion radius");
    } else if (key == "abundance") {
      s >> bath.config.abundance;
      need(s, "abundance");
    } else if (key == "max_spins") {
      std::string v;
      s >> v;
      need(s, "max_spins");
      if (v == "unbounded") {
        bath.config.max_spins.reset();
      } else {
        try {
          bath.config.max_spins = std::stoi(v);
        } catch (const std::exception&) {
          throw ParseError(path.string() + ": malformed max_spins value '" + v + "'");
        }
      }
    } else if (key == "field_bz_gauss") {
      double g = 0.0;
      s >> g;
      need(s, "field");
      bath.field_bz_tesla = g * kGaussToTesla;
    } else if (key == "spins") {
      s >> declared;
      need(s, "spin count");
      have_count = true;
      break;
    } else {
      throw ParseError(path.string() + ": unknown header key '" + key + "'");
    }
  }
  if (!have_count) throw ParseError(path.string() + ": missing 'spins' count");

  bath.positions.reserve(declared);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream s(line);
    std::size_t idx;
    double x, y, z;
    s >> idx >> x >> y >> z;
    if (s.fail()) throw ParseError(path.string() + ": malformed spin line '" + line + "'");
    if (idx != bath.positions.size())
      throw ParseError(path.string() + ": spin indices out of order at line '" + line + "'");
    bath.positions.emplace_back(x, y, z);
  }
  if (bath.positions.size() != declared)
    throw ParseError(path.string() + ": expected " + std::to_string(declared) + " spins, got " +
                     std::to_string(bath.positions.size()));
  bath.validate();
  return bath;
}

}  // namespace nvspin

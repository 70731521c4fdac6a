#include "nvspin/curve_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nvspin/errors.hpp"

namespace nvspin {

std::string format_full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_curve_csv(std::ostream& out, const SurvivalCurve& curve) {
  out << "# nvspin-curve v1\n";
  out << "# method=" << curve.meta.method << "\n";
  out << "# order=" << curve.meta.order << "\n";
  out << "# bath=" << curve.meta.bath_id << "\n";
  out << "# bz_gauss=" << format_full_precision(curve.meta.bz_gauss) << "\n";
  out << "# clusters=" << curve.meta.cluster_count << "\n";
  out << "# degraded=" << curve.meta.degraded_count << "\n";
  out << "t_us,P\n";
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    out << format_full_precision(curve.grid.t(static_cast<int>(i))) << ","
        << format_full_precision(curve.values[i]) << "\n";
  }
}

void write_curve_csv(const std::filesystem::path& path, const SurvivalCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  write_curve_csv(out, curve);
  if (!out) throw std::ios_base::failure("write to " + path.string() + " failed");
}

SurvivalCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "# nvspin-curve v1")
    throw ParseError(path.string() + ": missing curve format tag");

  SurvivalCurve curve;
  std::vector<double> times;
  auto meta_value = [&](const std::string& l) { return l.substr(l.find('=') + 1); };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.starts_with("# method=")) curve.meta.method = meta_value(line);
      else if (line.starts_with("# order=")) curve.meta.order = std::stoi(meta_value(line));
      else if (line.starts_with("# bath=")) curve.meta.bath_id = meta_value(line);
      else if (line.starts_with("# bz_gauss=")) curve.meta.bz_gauss = std::stod(meta_value(line));
      else if (line.starts_with("# clusters=")) curve.meta.cluster_count = std::stoull(meta_value(line));
      else if (line.starts_with("# degraded=")) curve.meta.degraded_count = std::stoull(meta_value(line));
      continue;
    }
    if (line == "t_us,P") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(path.string() + ": malformed row '" + line + "'");
    try {
      times.push_back(std::stod(line.substr(0, comma)));
      curve.values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (curve.values.empty()) throw ParseError(path.string() + ": no samples");
  curve.grid = TimeGrid{0.0, times.back(), static_cast<int>(times.size())};
  curve.grid.validate();
  return curve;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "# nvspin-sweep v1\n";
  out << "Bz_gauss,t1_us,inv_t1_per_us,baseline,residual,converged\n";
  for (const auto& row : rows) {
    out << format_full_precision(row.bz_gauss) << ",";
    if (row.fit_failed) {
      out << "nan,0,nan,nan,0\n";
      continue;
    }
    out << format_full_precision(row.fit.t1_us) << ","
        << format_full_precision(row.fit.rate_per_us()) << ","
        << format_full_precision(row.fit.baseline) << ","
        << format_full_precision(row.fit.rms_residual) << ","
        << (row.fit.converged ? 1 : 0) << "\n";
  }
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  write_sweep_csv(out, rows);
  if (!out) throw std::ios_base::failure("write to " + path.string() + " failed");
}

}  // namespace nvspin

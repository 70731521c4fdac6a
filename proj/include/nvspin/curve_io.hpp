#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "nvspin/analysis.hpp"
#include "nvspin/dynamics.hpp"

namespace nvspin {

/// Versioned CSV: '#' metadata header, then full-precision (t_us, P) rows.
void write_curve_csv(std::ostream& out, const SurvivalCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const SurvivalCurve& curve);
SurvivalCurve read_curve_csv(const std::filesystem::path& path);

/// Sweep table with columns Bz_gauss,t1_us,inv_t1_per_us,baseline,residual,converged.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

std::string format_full_precision(double v);

}  // namespace nvspin

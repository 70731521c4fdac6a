#include "nvspin/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nvspin/errors.hpp"

namespace nvspin {

namespace {

constexpr double kResidualThreshold = 0.05;  // rms above this flags the fit
constexpr int kMaxIterations = 300;

struct SsrEval {
  double ssr = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
};

SsrEval evaluate(const std::vector<double>& t, const std::vector<double>& y, double baseline,
                 double t1, bool with_jacobian) {
  SsrEval e;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double decay = std::exp(-t[i] / t1);
    const double r = baseline + (1.0 - baseline) * decay - y[i];
    e.ssr += r * r;
    if (with_jacobian) {
      const Eigen::Vector2d j(1.0 - decay, (1.0 - baseline) * decay * t[i] / (t1 * t1));
      e.gradient += j * r;
      e.normal += j * j.transpose();
    }
  }
  return e;
}

}  // namespace

double T1Fit::rate_per_us() const {
  if (!(t1_us > 0.0) || !std::isfinite(t1_us)) return 0.0;
  if (!(amplitude > 0.0)) return 0.0;
  return amplitude / t1_us;
}

T1Fit fit_t1(const SurvivalCurve& curve) {
  const std::size_t n = curve.values.size();
  if (n < 10) throw std::invalid_argument("fit needs at least 10 samples");
  if (curve.values.front() < 0.9 || curve.values.front() > 1.1)
    throw std::invalid_argument("fit expects a curve starting near P(0) = 1");

  const std::vector<double> t = curve.grid.samples();
  const std::vector<double>& y = curve.values;

  T1Fit fit;
  fit.baseline = y.back();
  fit.amplitude = 1.0 - fit.baseline;

  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*hi - *lo < 1e-12) {
    // No decay at all: report an infinite time constant and zero rate.
    fit.t1_us = std::numeric_limits<double>::infinity();
    fit.rms_residual = 0.0;
    fit.converged = true;
    return fit;
  }

  // Deterministic initialization: baseline from the final sample, T1 from
  // the first crossing of P = baseline + amplitude/e.
  double t1 = 0.5 * curve.grid.t_end_us;
  const double crossing = fit.baseline + fit.amplitude / std::numbers::e;
  for (std::size_t i = 1; i < n; ++i) {
    if ((y[i] <= crossing) != (y[0] <= crossing)) {
      t1 = std::max(t[i], curve.grid.dt());
      break;
    }
  }
  double baseline = fit.baseline;

  const double t1_min = curve.grid.dt() * 1e-3;
  const double t1_max = curve.grid.t_end_us * 1e9;
  double lambda = 1e-3;
  SsrEval cur = evaluate(t, y, baseline, t1, true);
  bool stable = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::Matrix2d lhs = cur.normal;
    lhs(0, 0) *= 1.0 + lambda;
    lhs(1, 1) *= 1.0 + lambda;
    const Eigen::Vector2d delta = lhs.ldlt().solve(-cur.gradient);
    if (!delta.allFinite()) break;

    const double next_baseline = baseline + delta(0);
    const double next_t1 = std::clamp(t1 + delta(1), t1_min, t1_max);
    const SsrEval trial = evaluate(t, y, next_baseline, next_t1, false);
    if (trial.ssr <= cur.ssr) {
      const double step = std::abs(delta(0)) + std::abs(delta(1)) / std::max(1.0, t1);
      const double improvement = cur.ssr - trial.ssr;
      baseline = next_baseline;
      t1 = next_t1;
      cur = evaluate(t, y, baseline, t1, true);
      lambda = std::max(lambda * 0.3, 1e-12);
      if (step < 1e-12 || improvement < 1e-16 * (1.0 + cur.ssr)) {
        stable = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  fit.baseline = baseline;
  fit.amplitude = 1.0 - baseline;
  fit.t1_us = t1;
  fit.rms_residual = std::sqrt(cur.ssr / static_cast<double>(n));
  fit.converged = stable && fit.rms_residual <= kResidualThreshold;
  return fit;
}

ResonanceRoots resonance_field(const PhysicalConstants& pc) {
  pc.validate();
  const double d = pc.zero_field_splitting_rad_s;
  const double ge = std::abs(pc.gamma_e_rad_s_t);
  const double gc = pc.gamma_c_rad_s_t;

  // |D + gamma_e B| - gamma_c B changes sign once on each side of the bare
  // anticrossing D/|gamma_e|.
  const auto mismatch = [&](double b_tesla) {
    return std::abs(d - ge * b_tesla) - gc * b_tesla;
  };
  const double b_cross = d / ge;
  const double b_hi_limit = 2000.0 * kGaussToTesla;
  if (b_cross <= 0.0 || b_cross >= b_hi_limit)
    throw ContractError("level anticrossing lies outside (0, 2000 G)");

  const auto bisect = [&](double lo, double hi) {
    double flo = mismatch(lo);
    if (flo * mismatch(hi) > 0.0)
      throw ContractError("no resonance root in the search interval");
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double fmid = mismatch(mid);
      if (fmid == 0.0) return mid;
      if (flo * fmid < 0.0) {
        hi = mid;
      } else {
        lo = mid;
        flo = fmid;
      }
    }
    return 0.5 * (lo + hi);
  };

  ResonanceRoots roots;
  roots.low_gauss = bisect(1e-9, b_cross) / kGaussToTesla;
  roots.high_gauss = bisect(b_cross, b_hi_limit) / kGaussToTesla;
  return roots;
}

std::vector<SweepRow> field_sweep(const SpinBath& bath, int order,
                                  std::span<const double> fields_gauss, const TimeGrid& grid,
                                  const PhysicalConstants& pc, CceOptions options) {
  if (fields_gauss.empty()) throw std::invalid_argument("field sweep needs at least one field");
  options.max_order = std::max(options.max_order, order);

  std::vector<SweepRow> rows;
  rows.reserve(fields_gauss.size());
  for (double bz_gauss : fields_gauss) {
    SweepRow row;
    row.bz_gauss = bz_gauss;
    try {
      CceEngine engine(bath, bz_gauss * kGaussToTesla, grid, pc, options);
      row.fit = fit_t1(engine.survival(order));
    } catch (const std::exception&) {
      row.fit_failed = true;
      row.fit = T1Fit{};
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nvspin

// nvspin: NV-center longitudinal relaxation in a 13C nuclear spin bath.
// Subcommands: generate-bath, run, sweep, convergence, validate, show-constants.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nvspin/analysis.hpp"
#include "nvspin/cce.hpp"
#include "nvspin/curve_io.hpp"
#include "nvspin/dynamics.hpp"
#include "nvspin/errors.hpp"
#include "nvspin/lattice.hpp"
#include "nvspin/oracle.hpp"

namespace fs = std::filesystem;
using namespace nvspin;

namespace {

// Exit codes: 0 success, 2 config/usage, 3 capacity, 4 I/O, 5 numerical contract.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kCapacityError = 3,
  kIoError = 4,
  kContractError = 5,
};

struct BathSource {
  std::string path;
  LatticeConfig config;
  int max_spins_flag = 50;  // 0 = unbounded
  bool from_file = false;
};

struct CommonOptions {
  double d_ghz = 2.87;
  double gamma_e = -1.76e11;
  double gamma_c = 6.73e7;
  int threads = 0;
  std::string cache_dir;
};

PhysicalConstants constants_from(const CommonOptions& c) {
  PhysicalConstants pc;
  pc.zero_field_splitting_rad_s = 2.0 * std::numbers::pi * c.d_ghz * 1e9;
  pc.gamma_e_rad_s_t = c.gamma_e;
  pc.gamma_c_rad_s_t = c.gamma_c;
  pc.validate();
  return pc;
}

void add_bath_options(CLI::App* cmd, BathSource& src) {
  cmd->add_option("--bath", src.path, "Bath file produced by generate-bath");
  cmd->add_option("--seed", src.config.seed, "Bath generation seed")->capture_default_str();
  cmd->add_option("--abundance", src.config.abundance, "13C occupation probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--shell-radius", src.config.shell_radius_nm, "Outer site cutoff (nm)")
      ->capture_default_str();
  cmd->add_option("--exclusion-radius", src.config.exclusion_radius_nm,
                  "Minimum NV-nucleus distance (nm)")
      ->capture_default_str();
  cmd->add_option("--lattice-constant", src.config.lattice_constant_nm,
                  "Diamond lattice constant (nm)")
      ->capture_default_str();
  cmd->add_option("--max-spins", src.max_spins_flag,
                  "Keep this many nearest spins (0 = unbounded)")
      ->capture_default_str();
  cmd->callback([&src, cmd] {
    src.from_file = cmd->count("--bath") > 0;
    src.config.max_spins =
        src.max_spins_flag > 0 ? std::optional<int>(src.max_spins_flag) : std::nullopt;
  });
}

SpinBath resolve_bath(const BathSource& src) {
  if (src.from_file) return load_bath(src.path);
  SpinBath bath = sample_bath(src.config);
  if (bath.positions.empty())
    throw std::invalid_argument("empty bath: no occupied sites for this configuration");
  return bath;
}

std::string field_tag(double gauss) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", gauss);
  std::string s(buf);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

void echo_resolved_config(const CLI::App& app, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "resolved_config.ini");
  out << app.config_to_str(true, true);
}

void attach_progress(CceEngine& engine, bool enabled) {
  if (!enabled) return;
  engine.set_progress([](int order, std::size_t done, std::size_t total) {
    if (done == total || done % 4096 == 0) {
      std::fprintf(stderr, "\r  order %d: %zu/%zu clusters", order, done, total);
      if (done == total) std::fprintf(stderr, "\n");
    }
  });
}

fs::path cache_file(const std::string& dir, const CceEngine& engine) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(engine.cache_key()));
  return fs::path(dir) / ("cce_" + std::string(buf) + ".bin");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_generate_bath(const BathSource& src, const std::string& out) {
  SpinBath bath = sample_bath(src.config);
  if (bath.positions.empty())
    throw std::invalid_argument("empty bath: no occupied sites for this configuration");
  save_bath(bath, out);
  double dmin = bath.positions.front().norm();
  double dmax = bath.positions.back().norm();
  std::printf("wrote %s: %d spins, distances %.4f..%.4f nm\n", out.c_str(), bath.size(), dmin,
              dmax);
  return kOk;
}

struct RunParams {
  BathSource bath;
  std::vector<double> bz_gauss;
  int order = 4;
  double t_end = 20.0;
  int points = 1001;
  std::string mode = "cce";
  std::string out_dir = ".";
  bool deterministic = true;
  bool progress = false;
  double pair_cutoff = -1.0;
};

int cmd_run(const RunParams& p, const CommonOptions& common, const CLI::App& app) {
  const PhysicalConstants pc = constants_from(common);
  const SpinBath bath = resolve_bath(p.bath);
  const TimeGrid grid = TimeGrid::uniform(p.t_end, p.points);
  echo_resolved_config(app, p.out_dir);

  CceOptions options;
  options.max_order = p.order;
  options.threads = common.threads;
  options.deterministic = p.deterministic;
  if (p.pair_cutoff > 0.0) options.pair_cutoff_nm = p.pair_cutoff;

  for (double bz : p.bz_gauss) {
    const double bz_tesla = bz * kGaussToTesla;
    SurvivalCurve cce_curve, exact_curve;
    if (p.mode == "cce" || p.mode == "both") {
      CceEngine engine(bath, bz_tesla, grid, pc, options);
      attach_progress(engine, p.progress);
      bool from_cache = false;
      if (!common.cache_dir.empty()) {
        fs::create_directories(common.cache_dir);
        from_cache = engine.load_cache(cache_file(common.cache_dir, engine));
      }
      cce_curve = engine.survival(p.order);
      if (!common.cache_dir.empty() && !from_cache)
        engine.save_cache(cache_file(common.cache_dir, engine));
      const fs::path file =
          fs::path(p.out_dir) / ("curve_cce_bz" + field_tag(bz) + "_M" + std::to_string(p.order) + ".csv");
      write_curve_csv(file, cce_curve);
      std::printf("wrote %s (%zu clusters, %zu degraded)\n", file.string().c_str(),
                  cce_curve.meta.cluster_count, cce_curve.meta.degraded_count);
      if (cce_curve.meta.degraded_count > 0)
        std::fprintf(stderr, "note: %zu cluster correlations hit the division floor\n",
                     cce_curve.meta.degraded_count);
    }
    if (p.mode == "exact" || p.mode == "both") {
      exact_curve = exact_survival(bath, bz_tesla, grid, pc);
      const fs::path file = fs::path(p.out_dir) / ("curve_exact_bz" + field_tag(bz) + ".csv");
      write_curve_csv(file, exact_curve);
      std::printf("wrote %s\n", file.string().c_str());
    }
    if (p.mode == "both") {
      double worst = 0.0;
      for (std::size_t i = 0; i < cce_curve.values.size(); ++i)
        worst = std::max(worst, std::abs(cce_curve.values[i] - exact_curve.values[i]));
      std::printf("max |cce - exact| = %.3e\n", worst);
    }
  }
  return kOk;
}

struct SweepParams {
  BathSource bath;
  double from = 1024.95;
  double to = 1025.05;
  int steps = 21;
  std::vector<double> fields;
  int order = 4;
  double t_end = 20.0;
  int points = 1001;
  std::string out_dir = ".";
  bool progress = false;
};

int cmd_sweep(const SweepParams& p, const CommonOptions& common, const CLI::App& app) {
  const PhysicalConstants pc = constants_from(common);
  const SpinBath bath = resolve_bath(p.bath);
  const TimeGrid grid = TimeGrid::uniform(p.t_end, p.points);
  echo_resolved_config(app, p.out_dir);

  std::vector<double> fields = p.fields;
  if (fields.empty()) {
    if (p.steps == 1) {
      fields.push_back(p.from);
    } else {
      for (int i = 0; i < p.steps; ++i)
        fields.push_back(p.from + (p.to - p.from) * i / (p.steps - 1));
    }
  }

  CceOptions options;
  options.max_order = p.order;
  options.threads = common.threads;
  const auto rows = field_sweep(bath, p.order, fields, grid, pc, options);

  const fs::path file = fs::path(p.out_dir) / "sweep.csv";
  write_sweep_csv(file, rows);
  std::printf("wrote %s (%zu fields)\n", file.string().c_str(), rows.size());
  for (const auto& row : rows) {
    if (row.fit_failed)
      std::printf("  %s G: fit failed\n", field_tag(row.bz_gauss).c_str());
    else
      std::printf("  %s G: 1/T1 = %.6g /us (T1 = %.6g us, baseline %.4f%s)\n",
                  field_tag(row.bz_gauss).c_str(), row.fit.rate_per_us(), row.fit.t1_us,
                  row.fit.baseline, row.fit.converged ? "" : ", not converged");
  }
  return kOk;
}

struct ConvergenceParams {
  BathSource bath;
  std::vector<int> orders{1, 2, 3, 4};
  std::vector<int> sizes;
  int size_order = 2;
  double bz = 1024.97;
  double t_end = 20.0;
  int points = 1001;
  std::string out_dir = ".";
  bool progress = false;
};

int cmd_convergence(const ConvergenceParams& p, const CommonOptions& common,
                    const CLI::App& app) {
  const PhysicalConstants pc = constants_from(common);
  const SpinBath bath = resolve_bath(p.bath);
  const TimeGrid grid = TimeGrid::uniform(p.t_end, p.points);
  echo_resolved_config(app, p.out_dir);

  std::vector<int> orders = p.orders;
  std::sort(orders.begin(), orders.end());

  CceOptions options;
  options.max_order = orders.back();
  options.threads = common.threads;
  CceEngine engine(bath, p.bz * kGaussToTesla, grid, pc, options);
  attach_progress(engine, p.progress);
  const auto diffs = engine.convergence_scan(orders);

  std::printf("order convergence at Bz = %s G (N = %d):\n", field_tag(p.bz).c_str(), bath.size());
  for (const auto& d : diffs)
    std::printf("  max |P(%d) - P(%d)| = %.6e\n", d.order_low, d.order_high, d.max_abs_diff);
  if (diffs.empty()) std::printf("  (single order requested; nothing to compare)\n");

  if (!p.sizes.empty()) {
    std::vector<int> sizes = p.sizes;
    std::sort(sizes.begin(), sizes.end());
    std::printf("bath-size convergence at order %d:\n", p.size_order);
    SurvivalCurve prev;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const int k = std::min(sizes[i], bath.size());
      CceOptions sub_options = options;
      sub_options.max_order = p.size_order;
      SurvivalCurve cur =
          cce_survival(bath.nearest_subset(k), p.size_order, p.bz * kGaussToTesla, grid, pc,
                       sub_options);
      if (i > 0) {
        double worst = 0.0;
        for (std::size_t j = 0; j < cur.values.size(); ++j)
          worst = std::max(worst, std::abs(cur.values[j] - prev.values[j]));
        std::printf("  max |P(N=%d) - P(N=%d)| = %.6e\n", sizes[i - 1], sizes[i], worst);
      }
      prev = std::move(cur);
    }
  }
  return kOk;
}

int cmd_validate(const CommonOptions& common) {
  const PhysicalConstants pc = constants_from(common);
  int failures = 0;
  auto report = [&](const char* name, bool ok, double value) {
    std::printf("[%s] %s (%.3e)\n", ok ? "ok" : "FAIL", name, value);
    if (!ok) ++failures;
  };

  const TimeGrid grid = TimeGrid::uniform(20.0, 201);

  double worst_denominator = 0.0;
  for (int i = 0; i < 10; ++i)
    worst_denominator =
        std::max(worst_denominator,
                 denominator_check((1024.0 + 0.2 * i) * kGaussToTesla, grid, pc));
  report("correlation denominators stay at unity", worst_denominator < 1e-12,
         worst_denominator);

  LatticeConfig cfg;
  cfg.seed = 11;
  cfg.max_spins = 3;
  const SpinBath bath = sample_bath(cfg);

  CceOptions options;
  options.max_order = bath.size();
  options.retain_all = true;
  options.threads = common.threads;
  CceEngine engine(bath, 1024.97 * kGaussToTesla, grid, pc, options);
  const SurvivalCurve full = engine.survival(bath.size());
  const SurvivalCurve exact = exact_survival(bath, 1024.97 * kGaussToTesla, grid, pc);
  double worst_oracle = 0.0;
  for (std::size_t i = 0; i < full.values.size(); ++i)
    worst_oracle = std::max(worst_oracle, std::abs(full.values[i] - exact.values[i]));
  report("full-order CCE matches exact propagation", worst_oracle < 1e-10, worst_oracle);

  // reconstruction identity on the full cluster
  double worst_reconstruction = 0.0;
  {
    std::vector<int> all(static_cast<std::size_t>(bath.size()));
    for (int i = 0; i < bath.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    const SurvivalCurve direct =
        evolve_survival(cluster_hamiltonian(bath, all, 1024.97 * kGaussToTesla, pc), grid);
    std::vector<double> product(direct.values.size(), 1.0);
    for (const auto& [indices, corr] : engine.table())
      for (std::size_t i = 0; i < product.size(); ++i) product[i] *= corr.values[i];
    for (std::size_t i = 0; i < product.size(); ++i)
      worst_reconstruction =
          std::max(worst_reconstruction, std::abs(product[i] - direct.values[i]));
  }
  report("cluster correlations reconstruct P exactly", worst_reconstruction < 1e-12,
         worst_reconstruction);

  // decoupled bath: without hyperfine terms nothing relaxes
  CceOptions decoupled = options;
  decoupled.hamiltonian.include_hyperfine = false;
  decoupled.max_order = 2;
  SurvivalCurve flat =
      cce_survival(bath, 2, 1024.97 * kGaussToTesla, grid, pc, decoupled);
  double worst_flat = 0.0;
  for (double v : flat.values) worst_flat = std::max(worst_flat, std::abs(v - 1.0));
  report("decoupled bath leaves P(t) = 1", worst_flat < 1e-12, worst_flat);

  double worst_hermiticity = 0.0;
  for (int i = 0; i < bath.size(); ++i) {
    std::vector<int> c{i};
    worst_hermiticity = std::max(
        worst_hermiticity,
        hermiticity_defect(cluster_hamiltonian(bath, c, 1024.97 * kGaussToTesla, pc)));
  }
  report("cluster Hamiltonians are hermitian", worst_hermiticity < 1e-12, worst_hermiticity);

  if (failures > 0) throw ContractError(std::to_string(failures) + " validation checks failed");
  std::printf("all validation checks passed\n");
  return kOk;
}

int cmd_show_constants(const CommonOptions& common) {
  const PhysicalConstants pc = constants_from(common);
  const LatticeConfig cfg;
  std::printf("physical constants:\n");
  std::printf("  zero-field splitting D   = %.17g rad/s (%.6g GHz)\n",
              pc.zero_field_splitting_rad_s,
              pc.zero_field_splitting_rad_s / (2.0 * std::numbers::pi * 1e9));
  std::printf("  gamma_e                  = %.17g rad s^-1 T^-1\n", pc.gamma_e_rad_s_t);
  std::printf("  gamma_c                  = %.17g rad s^-1 T^-1\n", pc.gamma_c_rad_s_t);
  std::printf("  mu0                      = %.17g T m A^-1\n", pc.mu0_t_m_a);
  std::printf("  hbar                     = %.17g J s\n", pc.hbar_j_s);
  std::printf("unit conventions:\n");
  std::printf("  internal energy unit rad/us, time unit us, positions nm\n");
  std::printf("  fields are gauss at the CLI (1 G = 1e-4 T)\n");
  std::printf("lattice defaults:\n");
  std::printf("  lattice constant %.4g nm, shell %.4g nm, exclusion %.4g nm\n",
              cfg.lattice_constant_nm, cfg.shell_radius_nm, cfg.exclusion_radius_nm);
  std::printf("  abundance %.4g, max spins %d\n", cfg.abundance, *cfg.max_spins);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV-center longitudinal relaxation in a 13C nuclear spin bath"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  CommonOptions common;
  app.add_option("--d-ghz", common.d_ghz, "Zero-field splitting (GHz)")->capture_default_str();
  app.add_option("--gamma-e", common.gamma_e, "Electron gyromagnetic ratio (rad/s/T)")
      ->capture_default_str();
  app.add_option("--gamma-c", common.gamma_c, "13C gyromagnetic ratio (rad/s/T)")
      ->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (0 = hardware)")
      ->envname("NVSPIN_THREADS")
      ->capture_default_str();
  app.add_option("--cache-dir", common.cache_dir, "Correlation-table cache directory")
      ->envname("NVSPIN_CACHE_DIR");

  // generate-bath
  auto* gen = app.add_subcommand("generate-bath", "Sample a random 13C bath and save it");
  BathSource gen_src;
  std::string gen_out = "bath.txt";
  add_bath_options(gen, gen_src);
  gen->add_option("--out", gen_out, "Output bath file")->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Compute survival probability curves");
  RunParams run_params;
  add_bath_options(run, run_params.bath);
  run->add_option("--bz", run_params.bz_gauss, "Magnetic field(s) along the NV axis (gauss)")
      ->required();
  run->add_option("--order", run_params.order, "CCE truncation order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--t-end", run_params.t_end, "End of the time grid (us)")->capture_default_str();
  run->add_option("--points", run_params.points, "Grid points")->capture_default_str();
  run->add_option("--mode", run_params.mode, "cce | exact | both")
      ->check(CLI::IsMember({"cce", "exact", "both"}))
      ->capture_default_str();
  run->add_option("--out-dir", run_params.out_dir, "Output directory")->capture_default_str();
  run->add_flag("--deterministic,!--no-deterministic", run_params.deterministic,
                "Fixed reduction order (byte-reproducible outputs)");
  run->add_flag("--progress", run_params.progress, "Report cluster progress on stderr");
  run->add_option("--pair-cutoff", run_params.pair_cutoff,
                  "Pairwise cluster distance cutoff in nm (<= 0 means unlimited)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Field sweep with T1 fits");
  SweepParams sweep_params;
  add_bath_options(sweep, sweep_params.bath);
  sweep->add_option("--from", sweep_params.from, "Sweep start (gauss)")->capture_default_str();
  sweep->add_option("--to", sweep_params.to, "Sweep end (gauss)")->capture_default_str();
  sweep->add_option("--steps", sweep_params.steps, "Number of sweep points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--fields", sweep_params.fields, "Explicit field list (gauss)");
  sweep->add_option("--order", sweep_params.order, "CCE truncation order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--t-end", sweep_params.t_end, "End of the time grid (us)")
      ->capture_default_str();
  sweep->add_option("--points", sweep_params.points, "Grid points")->capture_default_str();
  sweep->add_option("--out-dir", sweep_params.out_dir, "Output directory")->capture_default_str();
  sweep->add_flag("--progress", sweep_params.progress, "Report cluster progress on stderr");

  // convergence
  auto* conv = app.add_subcommand("convergence", "Order and bath-size convergence scans");
  ConvergenceParams conv_params;
  add_bath_options(conv, conv_params.bath);
  conv->add_option("--orders", conv_params.orders, "CCE orders to compare")
      ->capture_default_str();
  conv->add_option("--sizes", conv_params.sizes, "Bath sizes (nearest-K subsets) to compare");
  conv->add_option("--size-order", conv_params.size_order, "CCE order for the size scan")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  conv->add_option("--bz", conv_params.bz, "Magnetic field (gauss)")->capture_default_str();
  conv->add_option("--t-end", conv_params.t_end, "End of the time grid (us)")
      ->capture_default_str();
  conv->add_option("--points", conv_params.points, "Grid points")->capture_default_str();
  conv->add_option("--out-dir", conv_params.out_dir, "Output directory")->capture_default_str();
  conv->add_flag("--progress", conv_params.progress, "Report cluster progress on stderr");

  auto* validate = app.add_subcommand("validate", "Run the built-in consistency checks");
  auto* show = app.add_subcommand("show-constants", "Print constants and conventions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (gen->parsed()) return cmd_generate_bath(gen_src, gen_out);
    if (run->parsed()) return cmd_run(run_params, common, app);
    if (sweep->parsed()) return cmd_sweep(sweep_params, common, app);
    if (conv->parsed()) return cmd_convergence(conv_params, common, app);
    if (validate->parsed()) return cmd_validate(common);
    if (show->parsed()) return cmd_show_constants(common);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kCapacityError;
  } catch (const ContractError& e) {
    std::cerr << "numerical contract violated: " << e.what() << "\n";
    return kContractError;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}

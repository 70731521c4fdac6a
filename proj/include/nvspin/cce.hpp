#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "nvspin/constants.hpp"
#include "nvspin/dynamics.hpp"
#include "nvspin/hamiltonian.hpp"
#include "nvspin/lattice.hpp"

namespace nvspin {

/// Strictly ascending bath-spin indices; order = number of bath spins
/// (the electron is implicit in every cluster).
struct Cluster {
  std::vector<int> indices;

  int order() const { return static_cast<int>(indices.size()); }
  bool operator==(const Cluster&) const = default;
};

/// All clusters with 1 <= order <= max_order whose members are pairwise
/// within pair_cutoff_nm, in ascending (order, lexicographic) sequence.
/// max_order > bath size is clamped with a warning on stderr.
std::vector<Cluster> enumerate_clusters(const SpinBath& bath, int max_order,
                                        double pair_cutoff_nm = std::numeric_limits<double>::infinity());

/// Correlation curve of one cluster plus its diagnostics.
struct CorrelationCurve {
  std::vector<double> values;
  bool degraded = false;  // a sub-cluster divisor hit the division floor
  double min_abs = std::numeric_limits<double>::infinity();
};

struct IndexVectorHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

using CorrelationTable = std::unordered_map<std::vector<int>, CorrelationCurve, IndexVectorHash>;

struct CceOptions {
  int max_order = 2;            // largest order this engine will compute
  double pair_cutoff_nm = std::numeric_limits<double>::infinity();
  double division_floor = 1e-12;
  int threads = 0;              // 0 = hardware concurrency
  bool deterministic = true;    // recorded; reductions are always order-fixed
  bool retain_all = false;      // keep top-order correlations in the table too
  HamiltonianOptions hamiltonian;
};

/// Computes cluster correlations order by order, memoizes them, and
/// assembles truncated survival probabilities. Cluster evaluations within
/// an order run in parallel; products are folded sequentially in
/// enumeration order, so results are independent of the thread count.
class CceEngine {
 public:
  CceEngine(SpinBath bath, double bz_tesla, TimeGrid grid, PhysicalConstants pc = {},
            CceOptions options = {});

  /// Truncated survival probability P^(M), computing missing orders first.
  SurvivalCurve survival(int order);

  struct OrderDiff {
    int order_low = 0;
    int order_high = 0;
    double max_abs_diff = 0.0;
  };
  /// Successive max pointwise differences between the listed orders
  /// (ascending). The correlation table is shared across all orders.
  std::vector<OrderDiff> convergence_scan(std::span<const int> orders);

  const CorrelationTable& table() const { return table_; }
  const SpinBath& bath() const { return bath_; }
  const TimeGrid& grid() const { return grid_; }
  double bz_tesla() const { return bz_tesla_; }

  std::size_t clusters_evaluated() const { return clusters_evaluated_; }
  std::size_t degraded_clusters(int up_to_order) const;
  std::size_t floor_hits() const { return floor_hits_; }

  /// Called after each evaluation chunk with (done, total) for one order.
  void set_progress(std::function<void(int order, std::size_t done, std::size_t total)> cb) {
    progress_ = std::move(cb);
  }

  /// Correlation-table spill, keyed by bath/field/grid/constants/options.
  /// load_cache returns false (engine untouched) when the key mismatches.
  void save_cache(const std::filesystem::path& path) const;
  bool load_cache(const std::filesystem::path& path);
  std::uint64_t cache_key() const;

 private:
  void ensure_order(int order);
  int effective_order(int order) const;

  SpinBath bath_;
  double bz_tesla_;
  TimeGrid grid_;
  PhysicalConstants pc_;
  CceOptions options_;

  CorrelationTable table_;
  std::vector<std::vector<double>> order_products_;  // [k-1]: product over order-k correlations
  std::vector<std::size_t> order_counts_;
  std::vector<std::size_t> order_degraded_;
  int computed_max_ = 0;
  std::size_t clusters_evaluated_ = 0;
  std::size_t floor_hits_ = 0;
  std::function<void(int, std::size_t, std::size_t)> progress_;
};

/// One-shot M-order survival probability.
SurvivalCurve cce_survival(const SpinBath& bath, int order, double bz_tesla,
                           const TimeGrid& grid, const PhysicalConstants& pc = {},
                           CceOptions options = {});

}  // namespace nvspin

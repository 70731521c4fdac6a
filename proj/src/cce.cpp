#include "nvspin/cce.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

#include "nvspin/errors.hpp"
#include "nvspin/parallel.hpp"

namespace nvspin {

namespace {

void enumerate_order(const SpinBath& bath, int order, double cutoff_nm,
                     std::vector<Cluster>& out) {
  const int n = bath.size();
  std::vector<int> prefix;
  prefix.reserve(static_cast<std::size_t>(order));
  auto admissible = [&](int i) {
    for (int j : prefix) {
      if ((bath.positions[static_cast<std::size_t>(i)] -
           bath.positions[static_cast<std::size_t>(j)]).norm() > cutoff_nm)
        return false;
    }
    return true;
  };
  // DFS emits combinations in lexicographic order; pairwise admissibility
  // is hereditary, so pruning on the prefix is exact.
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(prefix.size()) == order) {
      out.push_back(Cluster{prefix});
      return;
    }
    const int remaining = order - static_cast<int>(prefix.size());
    for (int i = start; i <= n - remaining; ++i) {
      if (!admissible(i)) continue;
      prefix.push_back(i);
      self(self, i + 1);
      prefix.pop_back();
    }
  };
  rec(rec, 0);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return fnv1a(h, &bits, sizeof bits);
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return static_cast<bool>(in);
}

constexpr std::uint64_t kCacheMagic = 0x4e56434345433101ull;  // "NVCCEC1"-ish tag

}  // namespace

std::vector<Cluster> enumerate_clusters(const SpinBath& bath, int max_order,
                                        double pair_cutoff_nm) {
  if (max_order < 1) throw std::invalid_argument("cluster order must be at least 1");
  if (max_order > bath.size()) {
    std::cerr << "warning: order " << max_order << " exceeds bath size " << bath.size()
              << "; clamping\n";
    max_order = bath.size();
  }
  std::vector<Cluster> out;
  for (int k = 1; k <= max_order; ++k) enumerate_order(bath, k, pair_cutoff_nm, out);
  return out;
}

CceEngine::CceEngine(SpinBath bath, double bz_tesla, TimeGrid grid, PhysicalConstants pc,
                     CceOptions options)
    : bath_(std::move(bath)),
      bz_tesla_(bz_tesla),
      grid_(grid),
      pc_(pc),
      options_(options) {
  grid_.validate();
  pc_.validate();
  if (options_.max_order < 1) throw std::invalid_argument("max_order must be at least 1");
  if (options_.max_order > bath_.size()) options_.max_order = std::max(1, bath_.size());
  if (!(options_.division_floor > 0.0))
    throw std::invalid_argument("division floor must be positive");
  order_products_.resize(static_cast<std::size_t>(options_.max_order));
  order_counts_.assign(static_cast<std::size_t>(options_.max_order), 0);
  order_degraded_.assign(static_cast<std::size_t>(options_.max_order), 0);
}

int CceEngine::effective_order(int order) const {
  if (order < 1) throw std::invalid_argument("CCE order must be at least 1");
  if (order > options_.max_order && order > bath_.size()) {
    std::cerr << "warning: order " << order << " exceeds bath size " << bath_.size()
              << "; clamping\n";
    return std::max(1, std::min(options_.max_order, bath_.size()));
  }
  if (order > options_.max_order)
    throw std::invalid_argument("engine was constructed for max order " +
                                std::to_string(options_.max_order));
  return order;
}

void CceEngine::ensure_order(int order) {
  const std::size_t np = static_cast<std::size_t>(grid_.n_points);
  for (int k = computed_max_ + 1; k <= order; ++k) {
    std::vector<Cluster> clusters;
    enumerate_order(bath_, k, options_.pair_cutoff_nm, clusters);
    std::vector<double> product(np, 1.0);

    const bool retain = options_.retain_all || k < options_.max_order;
    const std::size_t total = clusters.size();
    const std::size_t chunk = 512;
    std::vector<CorrelationCurve> staged;
    std::size_t degraded = 0;

    for (std::size_t begin = 0; begin < total; begin += chunk) {
      const std::size_t count = std::min(chunk, total - begin);
      staged.assign(count, CorrelationCurve{});
      parallel_for(count, options_.threads, [&](std::size_t slot) {
        const Cluster& c = clusters[begin + slot];
        const Eigen::MatrixXcd h =
            cluster_hamiltonian(bath_, c.indices, bz_tesla_, pc_, options_.hamiltonian);
        CorrelationCurve corr;
        corr.values = evolve_survival(h, grid_).values;

        // Divide out every nonempty proper sub-cluster correlation.
        const int sz = c.order();
        std::vector<int> sub;
        sub.reserve(static_cast<std::size_t>(sz));
        for (unsigned mask = 1; mask + 1 < (1u << sz); ++mask) {
          sub.clear();
          for (int b = 0; b < sz; ++b)
            if (mask & (1u << b)) sub.push_back(c.indices[static_cast<std::size_t>(b)]);
          const auto it = table_.find(sub);
          if (it == table_.end())
            throw ContractError("missing sub-cluster correlation; enumeration order broken");
          const auto& divisor = it->second.values;
          for (std::size_t i = 0; i < np; ++i) {
            double d = divisor[i];
            if (std::abs(d) < options_.division_floor) {
              d = d < 0.0 ? -options_.division_floor : options_.division_floor;
              corr.degraded = true;
            }
            corr.values[i] /= d;
          }
        }
        for (double v : corr.values) corr.min_abs = std::min(corr.min_abs, std::abs(v));
        staged[slot] = std::move(corr);
      });

      // Sequential fold in enumeration order keeps results independent of
      // the thread count.
      for (std::size_t slot = 0; slot < count; ++slot) {
        CorrelationCurve& corr = staged[slot];
        for (std::size_t i = 0; i < np; ++i) product[i] *= corr.values[i];
        if (corr.degraded) {
          ++degraded;
          ++floor_hits_;
        }
        if (retain) table_.emplace(clusters[begin + slot].indices, std::move(corr));
      }
      clusters_evaluated_ += count;
      if (progress_) progress_(k, begin + count, total);
    }

    order_products_[static_cast<std::size_t>(k - 1)] = std::move(product);
    order_counts_[static_cast<std::size_t>(k - 1)] = total;
    order_degraded_[static_cast<std::size_t>(k - 1)] = degraded;
    computed_max_ = k;
  }
}

std::size_t CceEngine::degraded_clusters(int up_to_order) const {
  std::size_t n = 0;
  for (int k = 1; k <= up_to_order && k <= computed_max_; ++k)
    n += order_degraded_[static_cast<std::size_t>(k - 1)];
  return n;
}

SurvivalCurve CceEngine::survival(int order) {
  const int m = effective_order(order);
  ensure_order(m);

  SurvivalCurve curve;
  curve.grid = grid_;
  curve.values.assign(static_cast<std::size_t>(grid_.n_points), 1.0);
  for (int k = 1; k <= m; ++k) {
    const auto& p = order_products_[static_cast<std::size_t>(k - 1)];
    for (std::size_t i = 0; i < curve.values.size(); ++i) curve.values[i] *= p[i];
  }
  curve.meta.method = "cce";
  curve.meta.order = m;
  curve.meta.bath_id = bath_.id();
  curve.meta.bz_gauss = bz_tesla_ / kGaussToTesla;
  std::size_t count = 0;
  for (int k = 1; k <= m; ++k) count += order_counts_[static_cast<std::size_t>(k - 1)];
  curve.meta.cluster_count = count;
  curve.meta.degraded_count = degraded_clusters(m);
  return curve;
}

std::vector<CceEngine::OrderDiff> CceEngine::convergence_scan(std::span<const int> orders) {
  if (!std::is_sorted(orders.begin(), orders.end()))
    throw std::invalid_argument("orders must be ascending");
  std::vector<OrderDiff> diffs;
  if (orders.size() < 2) return diffs;
  SurvivalCurve prev = survival(orders[0]);
  for (std::size_t i = 1; i < orders.size(); ++i) {
    SurvivalCurve next = survival(orders[i]);
    double worst = 0.0;
    for (std::size_t j = 0; j < prev.values.size(); ++j)
      worst = std::max(worst, std::abs(prev.values[j] - next.values[j]));
    diffs.push_back({prev.meta.order, next.meta.order, worst});
    prev = std::move(next);
  }
  return diffs;
}

std::uint64_t CceEngine::cache_key() const {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a(h, &bath_.seed, sizeof bath_.seed);
  for (const auto& p : bath_.positions) {
    h = hash_double(h, p.x());
    h = hash_double(h, p.y());
    h = hash_double(h, p.z());
  }
  h = hash_double(h, bz_tesla_);
  h = hash_double(h, grid_.t_end_us);
  h = fnv1a(h, &grid_.n_points, sizeof grid_.n_points);
  h = hash_double(h, pc_.zero_field_splitting_rad_s);
  h = hash_double(h, pc_.gamma_e_rad_s_t);
  h = hash_double(h, pc_.gamma_c_rad_s_t);
  h = hash_double(h, pc_.mu0_t_m_a);
  h = hash_double(h, pc_.hbar_j_s);
  h = hash_double(h, options_.pair_cutoff_nm);
  h = hash_double(h, options_.division_floor);
  const int flags = (options_.hamiltonian.include_hyperfine ? 1 : 0) |
                    (options_.hamiltonian.include_bath_dipolar ? 2 : 0) |
                    (options_.retain_all ? 4 : 0);
  h = fnv1a(h, &flags, sizeof flags);
  h = fnv1a(h, &options_.max_order, sizeof options_.max_order);
  return h;
}

void CceEngine::save_cache(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open cache " + path.string());
  write_pod(out, kCacheMagic);
  write_pod(out, cache_key());
  write_pod(out, computed_max_);
  write_pod(out, clusters_evaluated_);
  write_pod(out, floor_hits_);
  for (int k = 1; k <= options_.max_order; ++k) {
    write_pod(out, order_counts_[static_cast<std::size_t>(k - 1)]);
    write_pod(out, order_degraded_[static_cast<std::size_t>(k - 1)]);
    const auto& prod = order_products_[static_cast<std::size_t>(k - 1)];
    const std::size_t n = prod.size();
    write_pod(out, n);
    out.write(reinterpret_cast<const char*>(prod.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  const std::size_t entries = table_.size();
  write_pod(out, entries);
  for (const auto& [indices, corr] : table_) {
    const std::size_t sz = indices.size();
    write_pod(out, sz);
    out.write(reinterpret_cast<const char*>(indices.data()),
              static_cast<std::streamsize>(sz * sizeof(int)));
    write_pod(out, corr.degraded);
    write_pod(out, corr.min_abs);
    const std::size_t n = corr.values.size();
    write_pod(out, n);
    out.write(reinterpret_cast<const char*>(corr.values.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!out) throw std::ios_base::failure("write to cache " + path.string() + " failed");
}

bool CceEngine::load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::uint64_t magic = 0, key = 0;
  if (!read_pod(in, magic) || magic != kCacheMagic) return false;
  if (!read_pod(in, key) || key != cache_key()) return false;

  int computed = 0;
  std::size_t evaluated = 0, hits = 0;
  if (!read_pod(in, computed) || !read_pod(in, evaluated) || !read_pod(in, hits)) return false;
  if (computed < 0 || computed > options_.max_order) return false;

  std::vector<std::vector<double>> products(static_cast<std::size_t>(options_.max_order));
  std::vector<std::size_t> counts(static_cast<std::size_t>(options_.max_order), 0);
  std::vector<std::size_t> degraded(static_cast<std::size_t>(options_.max_order), 0);
  for (int k = 1; k <= options_.max_order; ++k) {
    std::size_t n = 0;
    if (!read_pod(in, counts[static_cast<std::size_t>(k - 1)]) ||
        !read_pod(in, degraded[static_cast<std::size_t>(k - 1)]) || !read_pod(in, n))
      return false;
    products[static_cast<std::size_t>(k - 1)].resize(n);
    in.read(reinterpret_cast<char*>(products[static_cast<std::size_t>(k - 1)].data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) return false;
  }
  std::size_t entries = 0;
  if (!read_pod(in, entries)) return false;
  CorrelationTable table;
  table.reserve(entries);
  for (std::size_t e = 0; e < entries; ++e) {
    std::size_t sz = 0;
    if (!read_pod(in, sz) || sz > 64) return false;
    std::vector<int> indices(sz);
    in.read(reinterpret_cast<char*>(indices.data()),
            static_cast<std::streamsize>(sz * sizeof(int)));
    CorrelationCurve corr;
    std::size_t n = 0;
    if (!in || !read_pod(in, corr.degraded) || !read_pod(in, corr.min_abs) || !read_pod(in, n))
      return false;
    corr.values.resize(n);
    in.read(reinterpret_cast<char*>(corr.values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) return false;
    table.emplace(std::move(indices), std::move(corr));
  }

  table_ = std::move(table);
  order_products_ = std::move(products);
  order_counts_ = std::move(counts);
  order_degraded_ = std::move(degraded);
  computed_max_ = computed;
  clusters_evaluated_ = evaluated;
  floor_hits_ = hits;
  return true;
}

SurvivalCurve cce_survival(const SpinBath& bath, int order, double bz_tesla,
                           const TimeGrid& grid, const PhysicalConstants& pc,
                           CceOptions options) {
  options.max_order = std::max(options.max_order, order);
  CceEngine engine(bath, bz_tesla, grid, pc, options);
  return engine.survival(order);
}

}  // namespace nvspin

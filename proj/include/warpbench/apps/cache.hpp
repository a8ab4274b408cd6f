#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "warpbench/bench/load.hpp"
#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/workload.hpp"
#include "warpbench/instrument/csv.hpp"
#include "warpbench/tables/any_table.hpp"

namespace warpbench::apps {

class cache_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fraction of the table that the FIFO ring may fill.
inline constexpr double kCacheFill = 0.85;

/// Read-through cache over a table with FIFO eviction. Hits are lock-free
/// table queries; misses are handled one at a time under the ring's mutex,
/// which keeps the table's contents equal to the ring's.
class CacheSim {
 public:
  CacheSim(const TableConfig& cfg, const std::vector<Key>& universe, std::chrono::nanoseconds backing_latency = {})
      : table_(make_checked(cfg)),
        ring_capacity_(static_cast<std::size_t>(kCacheFill * static_cast<double>(table_->capacity_slots()))),
        latency_(backing_latency) {
    if (ring_capacity_ == 0) throw cache_error("cache table too small for an 85% ring");
    backing_.reserve(universe.size());
    for (Key k : universe) backing_.emplace(k, bench::value_for(k));
  }

  /// Value for `key`, fetching from the backing store on a miss.
  Value get(Key key) {
    if (const auto v = table_->query(key)) {
      hits_.fetch_add(1, std::memory_order_relaxed);
      return *v;
    }
    std::lock_guard lock(mu_);
    misses_.fetch_add(1, std::memory_order_relaxed);
    if (const auto v = table_->query(key)) return *v;  // another miss brought it in
    const auto it = backing_.find(key);
    if (it == backing_.end()) throw cache_error("key " + std::to_string(key) + " is outside the cache universe");
    if (latency_.count() > 0) spin_for(latency_);
    if (ring_.size() == ring_capacity_) evict_oldest();
    // Bucketed designs can fill a key's buckets before the ring is full;
    // keep evicting in FIFO order until it fits.
    while (table_->upsert(key, it->second, merge::keep_existing) == UpsertStatus::full) {
      if (ring_.empty()) throw cache_error("cache table reported full while empty");
      evict_oldest();
    }
    ring_.push_back(key);
    return it->second;
  }

  [[nodiscard]] std::uint64_t hits() const noexcept { return hits_.load(std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t misses() const noexcept { return misses_.load(std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t evictions() const noexcept { return evictions_.load(std::memory_order_relaxed); }
  [[nodiscard]] double hit_rate() const noexcept {
    const auto total = hits() + misses();
    return total ? static_cast<double>(hits()) / static_cast<double>(total) : 0.0;
  }
  [[nodiscard]] std::size_t ring_capacity() const noexcept { return ring_capacity_; }
  [[nodiscard]] std::size_t ring_size() const {
    std::lock_guard lock(mu_);
    return ring_.size();
  }
  [[nodiscard]] const Table& table() const noexcept { return *table_; }

  /// Quiescent check: table keys equal the ring's keys and every key is
  /// still in the backing store.
  [[nodiscard]] bool conserved() const {
    std::lock_guard lock(mu_);
    std::unordered_set<Key> in_table;
    table_->for_each([&](Key k, Value, const Slot*) { in_table.insert(k); });
    if (in_table.size() != ring_.size()) return false;
    for (Key k : ring_)
      if (!in_table.count(k) || !backing_.count(k)) return false;
    return true;
  }

 private:
  static std::unique_ptr<Table> make_checked(const TableConfig& cfg) {
    if (!is_stable(cfg.design) || cfg.design == Design::unsafe_reference)
      throw cache_error("cache needs a stable, synchronized design (got " + std::string(to_string(cfg.design)) + ")");
    return make_table(cfg);
  }

  // Caller holds mu_.
  void evict_oldest() {
    const Key victim = ring_.front();
    ring_.pop_front();
    if (const auto old = table_->query(victim)) backing_[victim] = *old;
    table_->erase(victim);
    evictions_.fetch_add(1, std::memory_order_relaxed);
  }

  static void spin_for(std::chrono::nanoseconds d) {
    const auto until = std::chrono::steady_clock::now() + d;
    while (std::chrono::steady_clock::now() < until) {
    }
  }

  std::unique_ptr<Table> table_;
  std::size_t ring_capacity_;
  std::chrono::nanoseconds latency_;
  mutable std::mutex mu_;
  std::deque<Key> ring_;
  std::unordered_map<Key, Value> backing_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> evictions_{0};
};

/// Expected hit rate of a FIFO cache holding m of u equally likely keys
/// over q uniform requests, counting the cold-start fill: filling takes
/// W = sum_{k<m} u/(u-k) requests, and each later request misses with
/// probability 1 - m/u.
[[nodiscard]] inline double expected_fifo_hit_rate(double u, double m, double q) {
  double warm = 0.0;
  for (double k = 0; k < m; ++k) warm += u / (u - k);
  if (warm >= q) return 0.0;  // never finished filling; a rough lower bound
  const double misses = m + (q - warm) * (1.0 - m / u);
  return 1.0 - misses / q;
}

struct CacheSpec {
  Design design = Design::p2_md;
  std::size_t universe = 100'000;
  std::vector<double> ratios;  // table slots / universe; empty selects 1%, 5%, 10%, ..., 70%
  double query_factor = 10.0;
  std::uint64_t seed = 1;
};

struct CachePoint {
  double ratio = 0.0;
  std::size_t capacity = 0;
  std::size_t ring_capacity = 0;
  std::uint64_t queries = 0;
  double hit_rate = 0.0;
  double expected_hit_rate = 0.0;
  double seconds = 0.0;
  bool conserved = false;
};

struct CacheResult {
  std::vector<CachePoint> points;
  std::vector<instrument::CsvRow> rows;
};

[[nodiscard]] inline std::vector<double> default_cache_ratios() {
  std::vector<double> r{0.01};
  for (int p = 5; p <= 70; p += 5) r.push_back(p / 100.0);
  return r;
}

/// Cache-ratio sweep with uniform requests; rows carry a hit_rate column.
inline CacheResult run_cache(const CacheSpec& spec, bench::ThreadPool& pool) {
  CacheResult res;
  const auto universe = bench::gen_uniform_keys(spec.seed, spec.universe);
  const auto ratios = spec.ratios.empty() ? default_cache_ratios() : spec.ratios;
  for (double ratio : ratios) {
    TableConfig cfg;
    cfg.design = spec.design;
    cfg = validate_config(cfg);
    const auto want = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(spec.universe)));
    const std::size_t unit = cfg.bucket_size;
    cfg.capacity_slots = std::max<std::size_t>(2 * unit, (want + unit - 1) / unit * unit);
    CacheSim sim(cfg, universe);
    const auto q = static_cast<std::uint64_t>(spec.query_factor * static_cast<double>(spec.universe));
    instrument::Stopwatch sw;
    pool.run([&](unsigned t) {
      bench::SplitMix rng(spec.seed ^ (0xbf58476d1ce4e5b9ULL * (t + 1)) ^ static_cast<std::uint64_t>(ratio * 1e6));
      const auto [b, e] = bench::share(q, t, pool.size());
      for (std::uint64_t i = b; i < e; ++i) (void)sim.get(universe[rng.below(universe.size())]);
    });
    CachePoint pt;
    pt.seconds = sw.seconds();
    pt.ratio = ratio;
    pt.capacity = sim.table().capacity_slots();
    pt.ring_capacity = sim.ring_capacity();
    pt.queries = q;
    pt.hit_rate = sim.hit_rate();
    pt.expected_hit_rate = expected_fifo_hit_rate(static_cast<double>(spec.universe), static_cast<double>(pt.ring_capacity),
                                                  static_cast<double>(q));
    pt.conserved = sim.conserved();
    res.points.push_back(pt);

    auto row = bench::base_row(sim.table().config(), pool.size(), "cache:" + instrument::format_fixed(ratio, 2));
    row.op = "get";
    row.load_factor = sim.table().load_factor();
    row.ops = q;
    row.seconds = pt.seconds;
    row.mops = pt.seconds > 0 ? static_cast<double>(q) / pt.seconds / 1e6 : 0.0;
    row.extra = {instrument::format_fixed(pt.hit_rate, 6)};
    res.rows.push_back(std::move(row));
  }
  return res;
}

}  // namespace warpbench::apps

#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "warpbench/core/config.hpp"
#include "warpbench/sync/lock_array.hpp"
#include "warpbench/tables/bucket_store.hpp"

namespace warpbench::tables {

/// One step of an eviction path: the occupant of (bucket, slot) moves to
/// the next step's bucket. The final step names the bucket holding the
/// free slot and has no slot.
struct CuckooStep {
  std::size_t bucket;
  int slot;
  Key occupant;
};

struct CuckooStats {
  std::uint64_t direct_inserts = 0;
  std::uint64_t path_inserts = 0;
  std::uint64_t moves = 0;
  std::uint64_t retries = 0;
  std::uint64_t longest_path = 0;
};

/// Bucketed k-way cuckoo hashing with libcuckoo-style insertion: an
/// unlocked breadth-first search for an eviction path, then the path is
/// executed backwards one locked move at a time. Every operation holds the
/// locks of all the key's buckets, so a move (which holds both its source
/// and destination, two of the mover's own buckets) excludes all other
/// operations on the moving key.
template <class Hooks = NullHooks>
class CuckooTable {
 public:
  static constexpr std::size_t kMaxWays = sync::OrderedGuard::kMax;
  static constexpr unsigned kRetryBudget = 16;
  static constexpr std::size_t kSearchNodes = 4096;

  explicit CuckooTable(const TableConfig& cfg)
      : cfg_(validate_config(cfg)), nb_(cfg_.capacity_slots / cfg_.bucket_size), ways_(cfg_.cuckoo_ways),
        store_(nb_, cfg_.bucket_size, cfg_.line_bytes, cfg_.mode), locks_(nb_, cfg_.mode) {}

  [[nodiscard]] const TableConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::size_t num_buckets() const noexcept { return nb_; }
  [[nodiscard]] std::size_t num_primary_buckets() const noexcept { return nb_; }
  [[nodiscard]] std::size_t capacity_slots() const noexcept { return cfg_.capacity_slots; }
  [[nodiscard]] std::size_t bytes_allocated() const noexcept { return store_.bytes() + locks_.bytes(); }
  [[nodiscard]] std::size_t lock_bytes() const noexcept { return locks_.bytes(); }

  [[nodiscard]] std::size_t primary_bucket(Key key) const {
    check_key(key);
    return cfg_.seeds.bucket(0, key, nb_);
  }

  struct Buckets {
    std::array<std::size_t, kMaxWays> at{};
    std::size_t n = 0;
    [[nodiscard]] std::span<const std::size_t> span() const noexcept { return {at.data(), n}; }
  };

  [[nodiscard]] Buckets buckets_of(Key key) const {
    check_key(key);
    Buckets bs;
    bs.n = ways_;
    for (std::size_t j = 0; j < ways_; ++j) bs.at[j] = cfg_.seeds.bucket(j, key, nb_);
    return bs;
  }

  template <class Merge>
  UpsertStatus upsert(Key key, Value value, Merge&& merge) {
    const Buckets bs = buckets_of(key);
    const Tag tag = 0;
    for (unsigned attempt = 0; attempt <= kRetryBudget; ++attempt) {
      {
        auto guard = lock_buckets<Hooks>(locks_, bs.span());
        Hooks::point(SchedPoint::after_lock);
        std::size_t free_bucket = nb_;
        int free_slot = -1;
        for (std::size_t j = 0; j < bs.n; ++j) {
          const ScanResult r = store_.scan(bs.at[j], key, tag);
          if (r.hit >= 0) {
            store_.update(bs.at[j], static_cast<std::size_t>(r.hit), value, merge);
            return UpsertStatus::updated;
          }
          if (free_slot < 0 && r.first_free >= 0) {
            free_bucket = bs.at[j];
            free_slot = r.first_free;
          }
        }
        Hooks::point(SchedPoint::after_probe);
        if (free_slot >= 0) {
          Hooks::point(SchedPoint::before_reserve);
          const int idx = store_.claim(free_bucket, free_slot);
          if (idx >= 0) {
            store_.fill(free_bucket, static_cast<std::size_t>(idx), key, value, tag);
            if (attempt == 0) bump(stats_.direct_inserts);
            else bump(stats_.path_inserts);
            return UpsertStatus::inserted;
          }
        }
      }
      // No free slot among the key's buckets: make room and try again.
      std::vector<CuckooStep> path;
      if (!find_path(bs, path)) return UpsertStatus::full;
      if (!execute_path(path)) bump(stats_.retries);
    }
    return UpsertStatus::full;
  }

  [[nodiscard]] std::optional<Value> query(Key key) const {
    const Buckets bs = buckets_of(key);
    auto guard = lock_buckets<Hooks>(locks_, bs.span());
    for (std::size_t j = 0; j < bs.n; ++j) {
      const ScanResult r = store_.scan(bs.at[j], key, 0);
      if (r.hit >= 0) return r.hit_value;
    }
    return std::nullopt;
  }

  bool erase(Key key) {
    const Buckets bs = buckets_of(key);
    auto guard = lock_buckets<Hooks>(locks_, bs.span());
    Hooks::point(SchedPoint::after_lock);
    for (std::size_t j = 0; j < bs.n; ++j) {
      const ScanResult r = store_.scan(bs.at[j], key, 0);
      if (r.hit >= 0) {
        store_.erase(bs.at[j], static_cast<std::size_t>(r.hit));
        return true;
      }
    }
    return false;
  }

  [[nodiscard]] std::optional<Value> query_untagged(Key key) const { return query(key); }

  [[nodiscard]] const Slot* locate(Key key) const {
    const Buckets bs = buckets_of(key);
    for (std::size_t j = 0; j < bs.n; ++j)
      if (const Slot* s = store_.find_slot(bs.at[j], key)) return s;
    return nullptr;
  }

  template <class F>
  void for_each(F&& fn) const {
    store_.for_each_occupied(fn);
  }

  /// Bucket holding a slot returned by locate or for_each.
  [[nodiscard]] std::size_t bucket_index(const Slot* s) const noexcept {
    return static_cast<std::size_t>(s - store_.bucket(0)) / cfg_.bucket_size;
  }

  /// Counters; exact only when read while quiescent.
  [[nodiscard]] CuckooStats stats() const noexcept {
    CuckooStats s;
    s.direct_inserts = load(stats_.direct_inserts);
    s.path_inserts = load(stats_.path_inserts);
    s.moves = load(stats_.moves);
    s.retries = load(stats_.retries);
    s.longest_path = load(stats_.longest_path);
    return s;
  }

  /// Breadth-first search, without locks, for at most cuckoo_path_depth
  /// moves that free a slot in one of `bs`. On success `path` runs from
  /// the root bucket to the bucket holding the free slot.
  bool find_path(const Buckets& bs, std::vector<CuckooStep>& path) const {
    struct Node {
      std::size_t bucket;
      std::size_t parent;
      int parent_slot;
      Key parent_key;
      std::size_t depth;
    };
    constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
    std::vector<Node> nodes;
    nodes.reserve(64);
    for (std::size_t j = 0; j < bs.n; ++j) nodes.push_back({bs.at[j], kRoot, -1, 0, 0});

    std::size_t goal = kRoot;
    for (std::size_t head = 0; head < nodes.size() && goal == kRoot; ++head) {
      const Node cur = nodes[head];
      if (cur.depth >= cfg_.cuckoo_path_depth) break;
      const Slot* s = store_.bucket(cur.bucket);
      for (std::size_t i = 0; i < cfg_.bucket_size && goal == kRoot; ++i) {
        Hooks::access(&s[i]);
        const auto v = sync::snapshot(s[i], cfg_.mode);
        if (v.state != SlotState::occupied) continue;
        const Buckets alt = buckets_of(v.key);
        for (std::size_t j = 0; j < alt.n; ++j) {
          const std::size_t c = alt.at[j];
          if (c == cur.bucket) continue;
          if (has_free(c)) {
            nodes.push_back({c, head, static_cast<int>(i), v.key, cur.depth + 1});
            goal = nodes.size() - 1;
            break;
          }
          if (nodes.size() < kSearchNodes) nodes.push_back({c, head, static_cast<int>(i), v.key, cur.depth + 1});
        }
      }
    }
    if (goal == kRoot) return false;

    // Root-first order; each step names the slot and occupant that move on.
    std::vector<std::size_t> chain;
    for (std::size_t n = goal; n != kRoot; n = nodes[n].parent) chain.push_back(n);
    path.clear();
    for (std::size_t k = chain.size(); k-- > 0;) {
      const Node& node = nodes[chain[k]];
      if (k > 0) {
        const Node& next = nodes[chain[k - 1]];
        path.push_back({node.bucket, next.parent_slot, next.parent_key});
      } else {
        path.push_back({node.bucket, -1, 0});
      }
    }
    return true;
  }

 private:
  bool has_free(std::size_t b) const noexcept {
    const Slot* s = store_.bucket(b);
    for (std::size_t i = 0; i < cfg_.bucket_size; ++i) {
      Hooks::access(&s[i]);
      const auto st = classify(sync::load_key(s[i], cfg_.mode));
      if (st == SlotState::empty || st == SlotState::tombstone) return true;
    }
    return false;
  }

  /// Moves occupants from the free end back toward the root. Returns false
  /// if any step finds the table changed underneath it.
  bool execute_path(const std::vector<CuckooStep>& path) {
    const std::uint64_t moves = path.size() - 1;
    std::atomic_ref<std::uint64_t> longest(stats_.longest_path);
    for (auto cur = longest.load(std::memory_order_relaxed); moves > cur;)
      if (longest.compare_exchange_weak(cur, moves, std::memory_order_relaxed)) break;
    // Phased mode elides bucket locks, but two evictions racing on one
    // occupant would copy it twice, so movers still take turns.
    std::unique_lock<std::mutex> phased_turn(move_mu_, std::defer_lock);
    if (cfg_.mode == Mode::phased) phased_turn.lock();
    for (std::size_t k = path.size() - 1; k-- > 0;) {
      const CuckooStep& from = path[k];
      const std::size_t dst = path[k + 1].bucket;
      const std::array<std::size_t, 2> pair{from.bucket, dst};
      auto guard = lock_buckets<Hooks>(locks_, pair);
      Slot& src = store_.bucket(from.bucket)[from.slot];
      Hooks::access(&src);
      const auto v = sync::snapshot(src, cfg_.mode);
      if (v.state != SlotState::occupied || v.key != from.occupant) return false;
      Hooks::point(SchedPoint::before_reserve);
      const int idx = store_.claim(dst, 0);
      if (idx < 0) return false;
      store_.fill(dst, static_cast<std::size_t>(idx), v.key, v.value, 0);
      store_.erase(from.bucket, static_cast<std::size_t>(from.slot));
      bump(stats_.moves);
    }
    return true;
  }

  static void bump(std::uint64_t& c) noexcept {
    std::atomic_ref<std::uint64_t>(c).fetch_add(1, std::memory_order_relaxed);
  }
  static std::uint64_t load(const std::uint64_t& c) noexcept {
    return std::atomic_ref<std::uint64_t>(const_cast<std::uint64_t&>(c)).load(std::memory_order_relaxed);
  }

  TableConfig cfg_;
  std::size_t nb_;
  std::size_t ways_;
  BucketStore<Hooks, false> store_;
  mutable sync::LockArray locks_;
  std::mutex move_mu_;
  alignas(64) CuckooStats stats_;
};

}  // namespace warpbench::tables

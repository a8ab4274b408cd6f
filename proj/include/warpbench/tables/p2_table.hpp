#pragma once

#include <cstddef>
#include <optional>

#include "warpbench/core/config.hpp"
#include "warpbench/sync/lock_array.hpp"
#include "warpbench/tables/bucket_store.hpp"

namespace warpbench::tables {

/// Routing outcome for a power-of-two-choice insert.
enum class P2Choice : std::uint8_t { primary, alternate, full };

/// Picks the bucket for a new key. `shortcut` means the primary bucket never
/// reached the threshold, so it is taken without consulting the alternate.
/// Otherwise the less-filled bucket wins, ties going to the primary.
[[nodiscard]] constexpr P2Choice route_p2(bool shortcut, unsigned primary_fill, unsigned alternate_fill,
                                          std::size_t bucket_size) noexcept {
  if (shortcut) return P2Choice::primary;
  if (primary_fill >= bucket_size && alternate_fill >= bucket_size) return P2Choice::full;
  return primary_fill <= alternate_fill ? P2Choice::primary : P2Choice::alternate;
}

/// Two-bucket lookup and placement over one BucketStore. Shared by the p2
/// tables and the iceberg backyard.
///
/// A key is placed in its alternate bucket only while the primary's
/// threshold slot is in use; that slot never returns to EMPTY, so an EMPTY
/// threshold slot proves the key is not in the alternate.
template <class Hooks, bool kMetadata>
class TwoChoice {
 public:
  using Store = BucketStore<Hooks, kMetadata>;

  TwoChoice(Store& store, double threshold) noexcept
      : store_(&store), thr_(threshold_index(threshold, store.bucket_size())) {}

  struct Found {
    std::size_t bucket;
    int slot;
    Value value;
  };

  struct Probe {
    ScanResult primary;
    ScanResult alternate;
    bool scanned_alternate = false;
    bool shortcut = false;
    std::optional<Found> hit;
  };

  [[nodiscard]] std::size_t threshold_slot() const noexcept { return thr_; }

  /// Existence scan used by writers; computes everything routing needs.
  Probe probe_for_write(std::size_t b0, std::size_t b1, Key key, Tag tag) const {
    Probe p;
    p.primary = store_->scan(b0, key, tag);
    if (p.primary.hit >= 0) {
      p.hit = Found{b0, p.primary.hit, p.primary.hit_value};
      return p;
    }
    Hooks::point(SchedPoint::after_probe);
    p.shortcut = primary_below_threshold(b0, p.primary);
    if (p.shortcut) return p;
    if (b1 == b0) {
      p.alternate = p.primary;
      return p;
    }
    p.scanned_alternate = true;
    p.alternate = store_->scan(b1, key, tag);
    if (p.alternate.hit >= 0) p.hit = Found{b1, p.alternate.hit, p.alternate.hit_value};
    Hooks::point(SchedPoint::after_probe);
    return p;
  }

  /// Lock-free lookup. Plain buckets reuse the threshold proof for an early
  /// exit; metadata buckets read the alternate's tags instead, which costs
  /// the same single line.
  [[nodiscard]] std::optional<Found> lookup(std::size_t b0, std::size_t b1, Key key, Tag tag) const {
    const ScanResult r0 = store_->scan(b0, key, tag);
    if (r0.hit >= 0) return Found{b0, r0.hit, r0.hit_value};
    if constexpr (!kMetadata) {
      if (r0.first_empty >= 0 && static_cast<std::size_t>(r0.first_empty) <= thr_) return std::nullopt;
    }
    if (b1 == b0) return std::nullopt;
    const ScanResult r1 = store_->scan(b1, key, tag);
    if (r1.hit >= 0) return Found{b1, r1.hit, r1.hit_value};
    return std::nullopt;
  }

  /// Places a key known to be absent. Returns false when both buckets are full.
  bool place(std::size_t b0, std::size_t b1, const Probe& p, Key key, Value value, Tag tag) {
    const unsigned fill1 = p.scanned_alternate ? p.alternate.fill : p.primary.fill;
    const P2Choice c = route_p2(p.shortcut, p.primary.fill, fill1, store_->bucket_size());
    if (c == P2Choice::full) return false;
    const bool first_primary = c == P2Choice::primary;
    Hooks::point(SchedPoint::before_reserve);
    const std::size_t first = first_primary ? b0 : b1;
    const std::size_t second = first_primary ? b1 : b0;
    int idx = store_->claim(first, first_primary ? p.primary.first_free : p.alternate.first_free);
    if (idx >= 0) {
      store_->fill(first, static_cast<std::size_t>(idx), key, value, tag);
      return true;
    }
    if (second == first) return false;
    idx = store_->claim(second, 0);
    if (idx >= 0) {
      store_->fill(second, static_cast<std::size_t>(idx), key, value, tag);
      return true;
    }
    return false;
  }

 private:
  bool primary_below_threshold(std::size_t b0, const ScanResult& r0) const {
    if constexpr (kMetadata) {
      return store_->slot_is_empty(b0, thr_);
    } else {
      return r0.first_empty >= 0 && static_cast<std::size_t>(r0.first_empty) <= thr_;
    }
  }

  Store* store_;
  std::size_t thr_;
};

/// Power-of-two-choice hashing. kLocked=false is the unsafe reference: the
/// same table with the primary-bucket lock elided.
template <bool kMetadata, bool kLocked = true, class Hooks = NullHooks>
class P2Table {
 public:
  explicit P2Table(const TableConfig& cfg)
      : cfg_(validate_config(cfg)), nb_(cfg_.capacity_slots / cfg_.bucket_size),
        store_(nb_, cfg_.bucket_size, cfg_.line_bytes, cfg_.mode), locks_(nb_, cfg_.mode),
        choice_(store_, cfg_.shortcut_threshold) {}

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
  [[nodiscard]] std::size_t alternate_bucket(Key key) const {
    check_key(key);
    return cfg_.seeds.bucket(1, key, nb_);
  }

  template <class Merge>
  UpsertStatus upsert(Key key, Value value, Merge&& merge) {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const std::size_t b0 = reduce(h, nb_);
    const std::size_t b1 = cfg_.seeds.bucket(1, key, nb_);
    sync::BucketGuard guard;
    if constexpr (kLocked) guard = lock_bucket<Hooks>(locks_, b0);
    Hooks::point(SchedPoint::after_lock);

    const auto p = choice_.probe_for_write(b0, b1, key, tag);
    if (p.hit) {
      store_.update(p.hit->bucket, static_cast<std::size_t>(p.hit->slot), value, merge);
      return UpsertStatus::updated;
    }
    return choice_.place(b0, b1, p, key, value, tag) ? UpsertStatus::inserted : UpsertStatus::full;
  }

  [[nodiscard]] std::optional<Value> query(Key key) const {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const auto f = choice_.lookup(reduce(h, nb_), cfg_.seeds.bucket(1, key, nb_), key, tag_from_hash(h));
    if (f) return f->value;
    return std::nullopt;
  }

  bool erase(Key key) {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const std::size_t b0 = reduce(h, nb_);
    sync::BucketGuard guard;
    if constexpr (kLocked) guard = lock_bucket<Hooks>(locks_, b0);
    Hooks::point(SchedPoint::after_lock);
    const auto f = choice_.lookup(b0, cfg_.seeds.bucket(1, key, nb_), key, tag_from_hash(h));
    if (!f) return false;
    store_.erase(f->bucket, static_cast<std::size_t>(f->slot));
    return true;
  }

  [[nodiscard]] std::optional<Value> query_untagged(Key key) const {
    check_key(key);
    if (auto v = store_.scan_untagged(primary_bucket(key), key)) return v;
    return store_.scan_untagged(alternate_bucket(key), key);
  }

  [[nodiscard]] const Slot* locate(Key key) const {
    if (const Slot* s = store_.find_slot(primary_bucket(key), key)) return s;
    return store_.find_slot(alternate_bucket(key), key);
  }

  template <class F>
  void for_each(F&& fn) const {
    store_.for_each_occupied(fn);
  }

  // Introspection for routing tests.
  [[nodiscard]] unsigned bucket_fill(std::size_t b) const {
    unsigned n = 0;
    for (std::size_t i = 0; i < cfg_.bucket_size; ++i) {
      const auto st = classify(sync::load_key(store_.bucket(b)[i]));
      n += st == SlotState::occupied || st == SlotState::reserved;
    }
    return n;
  }

 private:
  TableConfig cfg_;
  std::size_t nb_;
  BucketStore<Hooks, kMetadata> store_;
  mutable sync::LockArray locks_;
  TwoChoice<Hooks, kMetadata> choice_;
};

}  // namespace warpbench::tables

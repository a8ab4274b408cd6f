#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include "warpbench/core/config.hpp"
#include "warpbench/sync/lock_array.hpp"
#include "warpbench/tables/bucket_store.hpp"
#include "warpbench/tables/p2_table.hpp"

namespace warpbench::tables {

/// Where an iceberg insert lands.
enum class Yard : std::uint8_t { front, back };

/// Front buckets get round(fraction * total), clamped so both yards exist.
[[nodiscard]] inline std::size_t iceberg_front_buckets(std::size_t total, double fraction) noexcept {
  auto f = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  return std::clamp<std::size_t>(f, 1, total - 1);
}

/// Iceberg hashing: a single-hash front yard plus a small two-choice
/// backyard. Keys reach the backyard only while their front bucket has no
/// free slot, so a front bucket whose last slot is still EMPTY proves the
/// key is not in the backyard.
///
/// Front buckets are written only by holders of their own lock; backyard
/// buckets are shared and rely on slot reserves.
template <bool kMetadata, class Hooks = NullHooks>
class IcebergTable {
 public:
  explicit IcebergTable(const TableConfig& cfg)
      : cfg_(validate_config(cfg)), nb_(cfg_.capacity_slots / cfg_.bucket_size),
        front_n_(iceberg_front_buckets(nb_, cfg_.iceberg_front_fraction)), back_n_(nb_ - front_n_),
        front_(front_n_, cfg_.bucket_size, cfg_.line_bytes, cfg_.mode),
        back_(back_n_, cfg_.bucket_size, cfg_.line_bytes, cfg_.mode), locks_(front_n_, cfg_.mode),
        choice_(back_, cfg_.shortcut_threshold) {}

  [[nodiscard]] const TableConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::size_t num_buckets() const noexcept { return nb_; }
  [[nodiscard]] std::size_t num_primary_buckets() const noexcept { return front_n_; }
  [[nodiscard]] std::size_t num_back_buckets() const noexcept { return back_n_; }
  [[nodiscard]] std::size_t capacity_slots() const noexcept { return cfg_.capacity_slots; }
  [[nodiscard]] std::size_t bytes_allocated() const noexcept {
    return front_.bytes() + back_.bytes() + locks_.bytes();
  }
  [[nodiscard]] std::size_t lock_bytes() const noexcept { return locks_.bytes(); }

  [[nodiscard]] std::size_t primary_bucket(Key key) const {
    check_key(key);
    return cfg_.seeds.bucket(0, key, front_n_);
  }

  /// Backyard bucket pair, indices relative to the backyard array.
  [[nodiscard]] std::pair<std::size_t, std::size_t> back_buckets(Key key) const {
    check_key(key);
    return {cfg_.seeds.bucket(1, key, back_n_), cfg_.seeds.bucket(2, key, back_n_)};
  }

  template <class Merge>
  UpsertStatus upsert(Key key, Value value, Merge&& merge) {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const std::size_t f = reduce(h, front_n_);
    auto guard = lock_bucket<Hooks>(locks_, f);
    Hooks::point(SchedPoint::after_lock);

    const ScanResult rf = front_.scan(f, key, tag);
    if (rf.hit >= 0) {
      front_.update(f, static_cast<std::size_t>(rf.hit), value, merge);
      return UpsertStatus::updated;
    }
    Hooks::point(SchedPoint::after_probe);
    const bool front_unsaturated = front_.has_empty(f, rf);
    const auto [b1, b2] = back_buckets(key);
    typename TwoChoice<Hooks, kMetadata>::Probe p;
    if (!front_unsaturated) {
      p = choice_.probe_for_write(b1, b2, key, tag);
      if (p.hit) {
        back_.update(p.hit->bucket, static_cast<std::size_t>(p.hit->slot), value, merge);
        return UpsertStatus::updated;
      }
    }
    if (rf.first_free >= 0) {
      Hooks::point(SchedPoint::before_reserve);
      const int idx = front_.claim(f, rf.first_free);
      if (idx >= 0) {
        front_.fill(f, static_cast<std::size_t>(idx), key, value, tag);
        return UpsertStatus::inserted;
      }
      if (front_unsaturated) p = choice_.probe_for_write(b1, b2, key, tag);
    }
    if (!choice_.place(b1, b2, p, key, value, tag)) return UpsertStatus::full;
    return UpsertStatus::inserted;
  }

  [[nodiscard]] std::optional<Value> query(Key key) const {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const std::size_t f = reduce(h, front_n_);
    const ScanResult rf = front_.scan(f, key, tag);
    if (rf.hit >= 0) return rf.hit_value;
    if (front_.has_empty(f, rf)) return std::nullopt;
    const auto [b1, b2] = back_buckets(key);
    if (const auto found = choice_.lookup(b1, b2, key, tag)) return found->value;
    return std::nullopt;
  }

  bool erase(Key key) {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const std::size_t f = reduce(h, front_n_);
    auto guard = lock_bucket<Hooks>(locks_, f);
    Hooks::point(SchedPoint::after_lock);
    const ScanResult rf = front_.scan(f, key, tag);
    if (rf.hit >= 0) {
      front_.erase(f, static_cast<std::size_t>(rf.hit));
      return true;
    }
    if (front_.has_empty(f, rf)) return false;
    const auto [b1, b2] = back_buckets(key);
    const auto found = choice_.lookup(b1, b2, key, tag);
    if (!found) return false;
    back_.erase(found->bucket, static_cast<std::size_t>(found->slot));
    return true;
  }

  [[nodiscard]] std::optional<Value> query_untagged(Key key) const {
    if (auto v = front_.scan_untagged(primary_bucket(key), key)) return v;
    const auto [b1, b2] = back_buckets(key);
    if (auto v = back_.scan_untagged(b1, key)) return v;
    return back_.scan_untagged(b2, key);
  }

  [[nodiscard]] const Slot* locate(Key key) const {
    if (const Slot* s = front_.find_slot(primary_bucket(key), key)) return s;
    const auto [b1, b2] = back_buckets(key);
    if (const Slot* s = back_.find_slot(b1, key)) return s;
    return back_.find_slot(b2, key);
  }

  template <class F>
  void for_each(F&& fn) const {
    front_.for_each_occupied(fn);
    back_.for_each_occupied(fn);
  }

  /// Which yard holds the slot at `s` (as returned by locate).
  [[nodiscard]] Yard yard_of(const Slot* s) const noexcept {
    const Slot* base = front_.bucket(0);
    return s >= base && s < base + front_n_ * cfg_.bucket_size ? Yard::front : Yard::back;
  }

 private:
  TableConfig cfg_;
  std::size_t nb_;
  std::size_t front_n_;
  std::size_t back_n_;
  BucketStore<Hooks, kMetadata> front_;
  BucketStore<Hooks, kMetadata> back_;
  mutable sync::LockArray locks_;
  TwoChoice<Hooks, kMetadata> choice_;
};

}  // namespace warpbench::tables

#pragma once

#include <cstddef>
#include <numeric>
#include <optional>

#include "warpbench/core/config.hpp"
#include "warpbench/sync/lock_array.hpp"
#include "warpbench/tables/bucket_store.hpp"

namespace warpbench::tables {

/// Probe sequence b_i = (start + i * step) mod n. The step is forced odd and
/// then bumped until coprime with n, so every bucket is reachable.
class DoubleProbe {
 public:
  DoubleProbe(std::size_t start, std::uint64_t raw_step, std::size_t num_buckets)
      : start_(start % num_buckets), n_(num_buckets) {
    if (n_ == 1) return;
    std::size_t step = static_cast<std::size_t>((raw_step | 1u) % n_);
    if (step == 0) step = 1;
    while (std::gcd(step, n_) != 1) step = (step + 2) % n_;
    step_ = step;
  }

  [[nodiscard]] std::size_t at(std::size_t i) const noexcept {
    return static_cast<std::size_t>((start_ + static_cast<unsigned __int128>(i) * step_) % n_);
  }
  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t start_;
  std::size_t step_ = 0;
  std::size_t n_;
};

template <bool kMetadata, class Hooks = NullHooks>
class DoubleTable {
 public:
  explicit DoubleTable(const TableConfig& cfg)
      : cfg_(validate_config(cfg)), nb_(cfg_.capacity_slots / cfg_.bucket_size),
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

  [[nodiscard]] DoubleProbe route(Key key) const {
    check_key(key);
    return DoubleProbe(cfg_.seeds.bucket(0, key, nb_), cfg_.seeds.raw(1, key), nb_);
  }

  template <class Merge>
  UpsertStatus upsert(Key key, Value value, Merge&& merge) {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const DoubleProbe probe(reduce(h, nb_), cfg_.seeds.raw(1, key), nb_);
    auto guard = lock_bucket<Hooks>(locks_, probe.at(0));
    Hooks::point(SchedPoint::after_lock);

    std::size_t free_step = cfg_.probe_cap;
    int free_slot = -1;
    for (std::size_t i = 0; i < cfg_.probe_cap; ++i) {
      const std::size_t b = probe.at(i);
      const ScanResult r = store_.scan(b, key, tag);
      if (r.hit >= 0) {
        store_.update(b, static_cast<std::size_t>(r.hit), value, merge);
        return UpsertStatus::updated;
      }
      if (free_slot < 0 && r.first_free >= 0) {
        free_step = i;
        free_slot = r.first_free;
      }
      if (store_.has_empty(b, r)) break;
    }
    Hooks::point(SchedPoint::after_probe);
    if (free_slot < 0) return UpsertStatus::full;

    Hooks::point(SchedPoint::before_reserve);
    for (std::size_t i = free_step; i < cfg_.probe_cap; ++i) {
      const std::size_t b = probe.at(i);
      const int idx = store_.claim(b, i == free_step ? free_slot : 0);
      if (idx >= 0) {
        store_.fill(b, static_cast<std::size_t>(idx), key, value, tag);
        return UpsertStatus::inserted;
      }
    }
    return UpsertStatus::full;
  }

  [[nodiscard]] std::optional<Value> query(Key key) const {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const DoubleProbe probe(reduce(h, nb_), cfg_.seeds.raw(1, key), nb_);
    for (std::size_t i = 0; i < cfg_.probe_cap; ++i) {
      const std::size_t b = probe.at(i);
      const ScanResult r = store_.scan(b, key, tag);
      if (r.hit >= 0) return r.hit_value;
      if (store_.has_empty(b, r)) break;
    }
    return std::nullopt;
  }

  bool erase(Key key) {
    check_key(key);
    const std::uint64_t h = cfg_.seeds.raw(0, key);
    const Tag tag = tag_from_hash(h);
    const DoubleProbe probe(reduce(h, nb_), cfg_.seeds.raw(1, key), nb_);
    auto guard = lock_bucket<Hooks>(locks_, probe.at(0));
    Hooks::point(SchedPoint::after_lock);
    for (std::size_t i = 0; i < cfg_.probe_cap; ++i) {
      const std::size_t b = probe.at(i);
      const ScanResult r = store_.scan(b, key, tag);
      if (r.hit >= 0) {
        store_.erase(b, static_cast<std::size_t>(r.hit));
        return true;
      }
      if (store_.has_empty(b, r)) break;
    }
    return false;
  }

  [[nodiscard]] std::optional<Value> query_untagged(Key key) const {
    check_key(key);
    const auto probe = route(key);
    for (std::size_t i = 0; i < cfg_.probe_cap; ++i) {
      const std::size_t b = probe.at(i);
      if (auto v = store_.scan_untagged(b, key)) return v;
      if (sync::load_key(store_.bucket(b)[cfg_.bucket_size - 1], cfg_.mode) == kEmptyKey) break;
    }
    return std::nullopt;
  }

  [[nodiscard]] const Slot* locate(Key key) const {
    const auto probe = route(key);
    for (std::size_t i = 0; i < cfg_.probe_cap; ++i)
      if (const Slot* s = store_.find_slot(probe.at(i), key)) return s;
    return nullptr;
  }

  template <class F>
  void for_each(F&& fn) const {
    store_.for_each_occupied(fn);
  }

 private:
  TableConfig cfg_;
  std::size_t nb_;
  BucketStore<Hooks, kMetadata> store_;
  mutable sync::LockArray locks_;
};

}  // namespace warpbench::tables

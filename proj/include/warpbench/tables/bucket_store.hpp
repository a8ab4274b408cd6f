#pragma once

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>

#include "warpbench/core/types.hpp"
#include "warpbench/sync/lock_array.hpp"
#include "warpbench/sync/slot.hpp"
#include "warpbench/tables/hooks.hpp"

namespace warpbench::tables {

/// Zero-initialized, over-aligned array of a trivial type.
template <class T>
class AlignedArray {
  static_assert(std::is_trivially_copyable_v<T>);

 public:
  AlignedArray() = default;
  AlignedArray(std::size_t n, std::size_t alignment) : size_(n), align_(std::max(alignment, alignof(T))) {
    const std::size_t bytes = std::max<std::size_t>(n * sizeof(T), 1);
    data_ = static_cast<T*>(::operator new(bytes, std::align_val_t{align_}));
    std::memset(static_cast<void*>(data_), 0, bytes);
  }
  AlignedArray(AlignedArray&& o) noexcept
      : data_(std::exchange(o.data_, nullptr)), size_(std::exchange(o.size_, 0)), align_(o.align_) {}
  AlignedArray& operator=(AlignedArray&& o) noexcept {
    if (this != &o) {
      reset();
      data_ = std::exchange(o.data_, nullptr);
      size_ = std::exchange(o.size_, 0);
      align_ = o.align_;
    }
    return *this;
  }
  AlignedArray(const AlignedArray&) = delete;
  AlignedArray& operator=(const AlignedArray&) = delete;
  ~AlignedArray() { reset(); }

  [[nodiscard]] T* data() noexcept { return data_; }
  [[nodiscard]] const T* data() const noexcept { return data_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] std::size_t bytes() const noexcept { return size_ * sizeof(T); }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

 private:
  void reset() noexcept {
    if (data_) ::operator delete(static_cast<void*>(data_), std::align_val_t{align_});
    data_ = nullptr;
  }
  T* data_ = nullptr;
  std::size_t size_ = 0;
  std::size_t align_ = alignof(T);
};

/// Result of scanning one bucket for a key.
struct ScanResult {
  int hit = -1;          // slot index holding the key
  Value hit_value = 0;
  int first_free = -1;   // first EMPTY/TOMBSTONE slot (metadata: first zero tag)
  int first_empty = -1;  // plain buckets: first EMPTY slot, where the scan stopped
  unsigned fill = 0;     // RESERVED + OCCUPIED slots (metadata: nonzero tags)
};

/// Slot array split into fixed-size buckets, optionally with a packed 16-bit
/// tag array (one contiguous tag block per bucket).
///
/// Slots within a bucket are claimed lowest-free-first and EMPTY is never
/// re-entered, so EMPTY slots always form a suffix of the bucket: a scan may
/// stop at the first EMPTY slot, and a bucket has an EMPTY slot iff its last
/// slot is EMPTY.
template <class Hooks, bool kMetadata>
class BucketStore {
 public:
  BucketStore() = default;
  BucketStore(std::size_t num_buckets, std::size_t bucket_size, std::size_t line_bytes, Mode mode)
      : num_buckets_(num_buckets), bucket_size_(bucket_size), mode_(mode),
        slots_(num_buckets * bucket_size, std::max<std::size_t>(line_bytes, 64)) {
    if constexpr (kMetadata) tags_ = AlignedArray<Tag>(num_buckets * bucket_size, std::max<std::size_t>(line_bytes, 64));
  }

  static constexpr bool has_tags() noexcept { return kMetadata; }
  [[nodiscard]] std::size_t num_buckets() const noexcept { return num_buckets_; }
  [[nodiscard]] std::size_t bucket_size() const noexcept { return bucket_size_; }
  [[nodiscard]] Mode mode() const noexcept { return mode_; }
  [[nodiscard]] std::size_t bytes() const noexcept { return slots_.bytes() + tags_.bytes(); }

  [[nodiscard]] Slot* bucket(std::size_t b) noexcept { return slots_.data() + b * bucket_size_; }
  [[nodiscard]] const Slot* bucket(std::size_t b) const noexcept { return slots_.data() + b * bucket_size_; }
  [[nodiscard]] Tag* tags(std::size_t b) noexcept { return tags_.data() + b * bucket_size_; }
  [[nodiscard]] const Tag* tags(std::size_t b) const noexcept { return tags_.data() + b * bucket_size_; }

  [[nodiscard]] Tag load_tag(std::size_t b, std::size_t i) const noexcept {
    return std::atomic_ref<Tag>(const_cast<Tag&>(tags(b)[i]))
        .load(mode_ == Mode::concurrent ? std::memory_order_acquire : std::memory_order_relaxed);
  }

  ScanResult scan(std::size_t b, Key key, Tag tag) const noexcept {
    ScanResult r;
    const Slot* s = bucket(b);
    if constexpr (kMetadata) {
      Hooks::access(tags(b));
      for (std::size_t i = 0; i < bucket_size_; ++i) {
        const Tag t = load_tag(b, i);
        if (t == kEmptyTag) {
          if (r.first_free < 0) r.first_free = static_cast<int>(i);
          continue;
        }
        ++r.fill;
        if (t == tag && r.hit < 0) {
          Hooks::access(&s[i]);
          const auto v = sync::snapshot(s[i], mode_);
          if (v.state == SlotState::occupied && v.key == key) {
            r.hit = static_cast<int>(i);
            r.hit_value = v.value;
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < bucket_size_; ++i) {
        Hooks::access(&s[i]);
        const auto v = sync::snapshot(s[i], mode_);
        switch (v.state) {
          case SlotState::occupied:
            ++r.fill;
            if (v.key == key) {
              r.hit = static_cast<int>(i);
              r.hit_value = v.value;
              return r;
            }
            break;
          case SlotState::reserved: ++r.fill; break;
          case SlotState::tombstone:
            if (r.first_free < 0) r.first_free = static_cast<int>(i);
            break;
          case SlotState::empty:
            if (r.first_free < 0) r.first_free = static_cast<int>(i);
            r.first_empty = static_cast<int>(i);
            return r;
        }
      }
    }
    return r;
  }

  /// Full slot walk that ignores tags; reference for the tag path.
  [[nodiscard]] std::optional<Value> scan_untagged(std::size_t b, Key key) const noexcept {
    const Slot* s = bucket(b);
    for (std::size_t i = 0; i < bucket_size_; ++i) {
      const auto v = sync::snapshot(s[i], mode_);
      if (v.state == SlotState::occupied && v.key == key) return v.value;
    }
    return std::nullopt;
  }

  [[nodiscard]] bool slot_is_empty(std::size_t b, std::size_t i) const noexcept {
    const Slot* s = bucket(b);
    Hooks::access(&s[i]);
    return sync::load_key(s[i], mode_) == kEmptyKey;
  }

  /// Whether bucket `b` still holds a never-used slot, given its scan.
  [[nodiscard]] bool has_empty(std::size_t b, const ScanResult& r) const noexcept {
    if constexpr (kMetadata) {
      if (r.first_free < 0) return false;
      return slot_is_empty(b, bucket_size_ - 1);
    } else {
      return r.first_empty >= 0;
    }
  }

  /// Claims the first free slot at or after `from`. Returns its index or -1.
  int claim(std::size_t b, int from = 0) noexcept {
    Slot* s = bucket(b);
    for (std::size_t i = static_cast<std::size_t>(std::max(from, 0)); i < bucket_size_; ++i) {
      if constexpr (kMetadata) {
        Hooks::access(tags(b));
        if (load_tag(b, i) != kEmptyTag) continue;
      }
      Hooks::access(&s[i]);
      const Key k = sync::load_key(s[i], mode_);
      if ((k == kEmptyKey || k == kTombstoneKey) && sync::try_claim(s[i], k)) return static_cast<int>(i);
    }
    return -1;
  }

  /// Fills a slot this thread reserved: tag first, then the pair.
  void fill(std::size_t b, std::size_t i, Key key, Value value, Tag tag) noexcept {
    if constexpr (kMetadata) {
      Hooks::access(tags(b));
      std::atomic_ref<Tag>(tags(b)[i])
          .store(tag, mode_ == Mode::concurrent ? std::memory_order_release : std::memory_order_relaxed);
    }
    Hooks::point(SchedPoint::before_publish);
    Hooks::access(&bucket(b)[i]);
    sync::publish(bucket(b)[i], key, value, mode_);
  }

  /// Erases an occupied slot. Metadata buckets drop the tag before the slot
  /// is tombstoned so a concurrent claimant's tag cannot be clobbered.
  void erase(std::size_t b, std::size_t i) noexcept {
    Hooks::point(SchedPoint::before_tombstone);
    if constexpr (kMetadata) {
      Hooks::access(tags(b));
      std::atomic_ref<Tag>(tags(b)[i])
          .store(kEmptyTag, mode_ == Mode::concurrent ? std::memory_order_release : std::memory_order_relaxed);
    }
    Hooks::access(&bucket(b)[i]);
    sync::tombstone(bucket(b)[i], mode_);
  }

  template <class Merge>
  Value update(std::size_t b, std::size_t i, Value incoming, Merge&& merge) noexcept {
    Hooks::access(&bucket(b)[i]);
    return sync::update_value(bucket(b)[i], incoming, merge, mode_);
  }

  template <class F>
  void for_each_occupied(F&& fn) const {
    for (std::size_t b = 0; b < num_buckets_; ++b) {
      const Slot* s = bucket(b);
      for (std::size_t i = 0; i < bucket_size_; ++i) {
        const auto v = sync::snapshot(s[i], mode_);
        if (v.state == SlotState::occupied) fn(v.key, v.value, &s[i]);
      }
    }
  }

  [[nodiscard]] const Slot* find_slot(std::size_t b, Key key) const noexcept {
    const Slot* s = bucket(b);
    for (std::size_t i = 0; i < bucket_size_; ++i) {
      const auto v = sync::snapshot(s[i], mode_);
      if (v.state == SlotState::occupied && v.key == key) return &s[i];
    }
    return nullptr;
  }

 private:
  std::size_t num_buckets_ = 0;
  std::size_t bucket_size_ = 0;
  Mode mode_ = Mode::concurrent;
  AlignedArray<Slot> slots_;
  AlignedArray<Tag> tags_;
};

/// Records the lock-word access for probe accounting, then locks.
template <class Hooks>
[[nodiscard]] inline sync::BucketGuard lock_bucket(sync::LockArray& locks, std::size_t b) {
  if (!locks.elided()) Hooks::lock_access(locks.word_address(b));
  return sync::BucketGuard(locks, b);
}

template <class Hooks>
[[nodiscard]] inline sync::OrderedGuard lock_buckets(sync::LockArray& locks, std::span<const std::size_t> bs) {
  if (!locks.elided())
    for (std::size_t b : bs) Hooks::lock_access(locks.word_address(b));
  return sync::OrderedGuard(locks, bs);
}

/// Slot index of the shortcut threshold: a bucket whose slot at this index
/// has never been used has never been filled past the threshold.
[[nodiscard]] inline std::size_t threshold_index(double threshold, std::size_t bucket_size) noexcept {
  auto n = static_cast<std::size_t>(threshold * static_cast<double>(bucket_size) + 0.999999);
  n = std::clamp<std::size_t>(n, 1, bucket_size);
  return n - 1;
}

}  // namespace warpbench::tables

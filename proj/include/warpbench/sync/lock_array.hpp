#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <thread>
#include <utility>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

#include "warpbench/core/types.hpp"

namespace warpbench::sync {

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  _mm_pause();
#endif
}

/// Exponential spin backoff. Past the ceiling each round also yields so a
/// preempted lock holder can run when threads outnumber cores.
class Backoff {
 public:
  static constexpr unsigned kCeiling = 64;

  void pause() noexcept {
    for (unsigned i = 0; i < spins_; ++i) cpu_relax();
    if (spins_ < kCeiling) spins_ <<= 1;
    else std::this_thread::yield();
  }

 private:
  unsigned spins_ = 1;
};

/// One lock bit per bucket, packed into 64-bit words held outside the table
/// data. In phased mode every acquire/release is a no-op.
class LockArray {
 public:
  LockArray() = default;
  LockArray(std::size_t num_buckets, Mode mode)
      : size_(num_buckets), words_((num_buckets + 63) / 64), mode_(mode),
        bits_(std::make_unique<std::atomic<std::uint64_t>[]>(words_)) {
    for (std::size_t i = 0; i < words_; ++i) bits_[i].store(0, std::memory_order_relaxed);
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] Mode mode() const noexcept { return mode_; }
  [[nodiscard]] bool elided() const noexcept { return mode_ == Mode::phased; }
  [[nodiscard]] std::size_t bytes() const noexcept { return words_ * sizeof(std::uint64_t); }

  /// Address of the word holding bucket `b`'s bit (for probe accounting).
  [[nodiscard]] const void* word_address(std::size_t b) const noexcept { return &bits_[b / 64]; }

  [[nodiscard]] bool try_lock(std::size_t b) noexcept {
    if (elided()) return true;
    assert(b < size_);
    const std::uint64_t bit = std::uint64_t{1} << (b % 64);
    return (bits_[b / 64].fetch_or(bit, std::memory_order_acquire) & bit) == 0;
  }

  void lock(std::size_t b) noexcept {
    if (elided()) return;
    assert(b < size_);
    auto& word = bits_[b / 64];
    const std::uint64_t bit = std::uint64_t{1} << (b % 64);
    Backoff backoff;
    for (;;) {
      if ((word.load(std::memory_order_relaxed) & bit) == 0 &&
          (word.fetch_or(bit, std::memory_order_acquire) & bit) == 0)
        return;
      backoff.pause();
    }
  }

  void unlock(std::size_t b) noexcept {
    if (elided()) return;
    assert(is_locked(b));
    bits_[b / 64].fetch_and(~(std::uint64_t{1} << (b % 64)), std::memory_order_release);
  }

  [[nodiscard]] bool is_locked(std::size_t b) const noexcept {
    return (bits_[b / 64].load(std::memory_order_relaxed) >> (b % 64)) & 1u;
  }

 private:
  std::size_t size_ = 0;
  std::size_t words_ = 0;
  Mode mode_ = Mode::concurrent;
  std::unique_ptr<std::atomic<std::uint64_t>[]> bits_;
};

/// Holds one bucket lock. Must be released on the acquiring thread.
class [[nodiscard]] BucketGuard {
 public:
  BucketGuard() = default;
  BucketGuard(LockArray& locks, std::size_t b) : locks_(&locks), bucket_(b) { locks.lock(b); }
  BucketGuard(BucketGuard&& o) noexcept : locks_(std::exchange(o.locks_, nullptr)), bucket_(o.bucket_) {}
  BucketGuard& operator=(BucketGuard&& o) noexcept {
    if (this != &o) {
      release();
      locks_ = std::exchange(o.locks_, nullptr);
      bucket_ = o.bucket_;
    }
    return *this;
  }
  BucketGuard(const BucketGuard&) = delete;
  BucketGuard& operator=(const BucketGuard&) = delete;
  ~BucketGuard() { release(); }

  void release() noexcept {
    if (locks_) locks_->unlock(bucket_);
    locks_ = nullptr;
  }
  [[nodiscard]] bool owns() const noexcept { return locks_ != nullptr; }

 private:
  LockArray* locks_ = nullptr;
  std::size_t bucket_ = 0;
};

/// Holds up to kMax bucket locks, acquired in ascending index order so that
/// overlapping multi-bucket acquisitions cannot deadlock.
class [[nodiscard]] OrderedGuard {
 public:
  static constexpr std::size_t kMax = 8;

  OrderedGuard() = default;
  OrderedGuard(LockArray& locks, std::span<const std::size_t> buckets) : locks_(&locks) {
    assert(!buckets.empty() && buckets.size() <= kMax);
    std::copy(buckets.begin(), buckets.end(), order_.begin());
    std::sort(order_.begin(), order_.begin() + buckets.size());
    count_ = static_cast<std::size_t>(std::unique(order_.begin(), order_.begin() + buckets.size()) -
                                      order_.begin());
    for (std::size_t i = 0; i < count_; ++i) locks.lock(order_[i]);
  }
  OrderedGuard(OrderedGuard&& o) noexcept
      : locks_(std::exchange(o.locks_, nullptr)), order_(o.order_), count_(o.count_) {}
  OrderedGuard& operator=(OrderedGuard&& o) noexcept {
    if (this != &o) {
      release();
      locks_ = std::exchange(o.locks_, nullptr);
      order_ = o.order_;
      count_ = o.count_;
    }
    return *this;
  }
  OrderedGuard(const OrderedGuard&) = delete;
  OrderedGuard& operator=(const OrderedGuard&) = delete;
  ~OrderedGuard() { release(); }

  void release() noexcept {
    if (!locks_) return;
    for (std::size_t i = count_; i-- > 0;) locks_->unlock(order_[i]);
    locks_ = nullptr;
  }

  /// Buckets in acquisition order (sorted, deduplicated).
  [[nodiscard]] std::span<const std::size_t> order() const noexcept { return {order_.data(), count_}; }

 private:
  LockArray* locks_ = nullptr;
  std::array<std::size_t, kMax> order_{};
  std::size_t count_ = 0;
};

[[nodiscard]] inline BucketGuard lock(LockArray& locks, std::size_t b) { return BucketGuard(locks, b); }

[[nodiscard]] inline OrderedGuard lock_ordered(LockArray& locks, std::span<const std::size_t> buckets) {
  return OrderedGuard(locks, buckets);
}

}  // namespace warpbench::sync

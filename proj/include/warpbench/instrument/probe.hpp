#pragma once

// Probe accounting: a probe is one distinct line_bytes-aligned region touched
// during a single operation. Lock words count too.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "warpbench/core/hash.hpp"

namespace warpbench::instrument {

enum class OpKind : std::uint8_t { insert, query, query_pos, query_neg, erase, update };
inline constexpr std::size_t kOpKinds = 6;

[[nodiscard]] constexpr std::string_view to_string(OpKind k) noexcept {
  switch (k) {
    case OpKind::insert: return "insert";
    case OpKind::query: return "query";
    case OpKind::query_pos: return "query_pos";
    case OpKind::query_neg: return "query_neg";
    case OpKind::erase: return "erase";
    case OpKind::update: return "update";
  }
  return "?";
}

// Bins 0..63 count exact probe totals; the last bin collects everything above.
inline constexpr std::size_t kHistogramBins = 65;

struct OpStats {
  std::uint64_t op_count = 0;
  std::uint64_t total_line_probes = 0;
  std::uint64_t lock_probes = 0;
  std::array<std::uint64_t, kHistogramBins> histogram{};

  [[nodiscard]] double mean() const noexcept {
    return op_count ? static_cast<double>(total_line_probes) / static_cast<double>(op_count) : 0.0;
  }

  OpStats& operator+=(const OpStats& o) noexcept {
    op_count += o.op_count;
    total_line_probes += o.total_line_probes;
    lock_probes += o.lock_probes;
    for (std::size_t i = 0; i < kHistogramBins; ++i) histogram[i] += o.histogram[i];
    return *this;
  }
  friend bool operator==(const OpStats&, const OpStats&) = default;
};

class ProbeStats {
 public:
  explicit ProbeStats(std::size_t line_bytes = 128) : line_bytes_(line_bytes) {}

  [[nodiscard]] std::size_t line_bytes() const noexcept { return line_bytes_; }
  [[nodiscard]] const OpStats& operator[](OpKind k) const noexcept { return ops_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] OpStats& operator[](OpKind k) noexcept { return ops_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] double mean(OpKind k) const noexcept { return (*this)[k].mean(); }
  [[nodiscard]] bool overflowed() const noexcept { return overflow_; }
  void mark_overflow() noexcept { overflow_ = true; }

  [[nodiscard]] std::uint64_t total_lock_probes() const noexcept {
    std::uint64_t n = 0;
    for (const auto& s : ops_) n += s.lock_probes;
    return n;
  }

  void add(OpKind k, std::uint64_t probes, std::uint64_t lock_probes) noexcept {
    auto& s = (*this)[k];
    ++s.op_count;
    s.total_line_probes += probes;
    s.lock_probes += lock_probes;
    ++s.histogram[probes < kHistogramBins - 1 ? probes : kHistogramBins - 1];
  }

  ProbeStats& operator+=(const ProbeStats& o) noexcept {
    for (std::size_t i = 0; i < kOpKinds; ++i) ops_[i] += o.ops_[i];
    overflow_ = overflow_ || o.overflow_;
    return *this;
  }
  friend bool operator==(const ProbeStats&, const ProbeStats&) = default;

 private:
  std::size_t line_bytes_;
  std::array<OpStats, kOpKinds> ops_{};
  bool overflow_ = false;
};

[[nodiscard]] inline ProbeStats merge(const ProbeStats& a, const ProbeStats& b) {
  ProbeStats out = a;
  out += b;
  return out;
}

[[nodiscard]] inline ProbeStats merge(const std::vector<ProbeStats>& parts, std::size_t line_bytes = 128) {
  ProbeStats out(parts.empty() ? line_bytes : parts.front().line_bytes());
  for (const auto& p : parts) out += p;
  return out;
}

/// Fixed-capacity set of line indices for one operation. Clearing is O(1)
/// via a generation stamp. Saturates at kCapacity distinct lines.
class LineSet {
 public:
  static constexpr std::size_t kCapacity = 1024;
  static constexpr std::size_t kSlots = 2 * kCapacity;

  /// True if the line was not yet present.
  bool insert(std::uint64_t line) noexcept {
    if (size_ >= kCapacity) {
      saturated_ = true;
      return false;
    }
    std::size_t h = fmix64(line) & (kSlots - 1);
    while (stamp_[h] == generation_) {
      if (lines_[h] == line) return false;
      h = (h + 1) & (kSlots - 1);
    }
    stamp_[h] = generation_;
    lines_[h] = line;
    ++size_;
    return true;
  }

  void clear() noexcept {
    size_ = 0;
    saturated_ = false;
    if (++generation_ == 0) {
      stamp_.fill(0);
      generation_ = 1;
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool saturated() const noexcept { return saturated_; }

 private:
  std::array<std::uint64_t, kSlots> lines_{};
  std::array<std::uint32_t, kSlots> stamp_{};
  std::uint32_t generation_ = 1;
  std::size_t size_ = 0;
  bool saturated_ = false;
};

/// Per-thread operation context. Accesses accumulate into the current
/// operation until finish_op flushes them into the thread's stats.
class ProbeContext {
 public:
  explicit ProbeContext(std::size_t line_bytes = 128) : line_bytes_(line_bytes), stats_(line_bytes) {}

  void record_access(std::uintptr_t address) noexcept { lines_.insert(address / line_bytes_); }
  void record_access(const void* p) noexcept { record_access(reinterpret_cast<std::uintptr_t>(p)); }

  void record_lock(const void* p) noexcept {
    record_access(p);
    ++lock_accesses_;
  }

  std::uint64_t finish_op(OpKind kind) noexcept {
    const std::uint64_t probes = lines_.size();
    if (lines_.saturated()) stats_.mark_overflow();
    stats_.add(kind, probes, lock_accesses_);
    lines_.clear();
    lock_accesses_ = 0;
    return probes;
  }

  /// Drops the in-flight operation without recording it.
  void discard_op() noexcept {
    lines_.clear();
    lock_accesses_ = 0;
  }

  [[nodiscard]] std::size_t pending() const noexcept { return lines_.size(); }
  [[nodiscard]] const ProbeStats& stats() const noexcept { return stats_; }
  [[nodiscard]] std::size_t line_bytes() const noexcept { return line_bytes_; }
  void reset() noexcept {
    stats_ = ProbeStats(line_bytes_);
    discard_op();
  }

 private:
  std::size_t line_bytes_;
  LineSet lines_;
  std::uint64_t lock_accesses_ = 0;
  ProbeStats stats_;
};

namespace detail {
inline thread_local ProbeContext* t_context = nullptr;
}

[[nodiscard]] inline ProbeContext* current_context() noexcept { return detail::t_context; }

/// Installs a context on the calling thread for the guard's lifetime.
class ScopedContext {
 public:
  explicit ScopedContext(ProbeContext& ctx) noexcept : prev_(detail::t_context) { detail::t_context = &ctx; }
  ~ScopedContext() { detail::t_context = prev_; }
  ScopedContext(const ScopedContext&) = delete;
  ScopedContext& operator=(const ScopedContext&) = delete;

 private:
  ProbeContext* prev_;
};

}  // namespace warpbench::instrument

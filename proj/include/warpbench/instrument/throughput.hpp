#pragma once

#include <chrono>
#include <cstdint>

#include "warpbench/instrument/probe.hpp"

namespace warpbench::instrument {

struct ThroughputSample {
  OpKind op = OpKind::insert;
  std::uint64_t ops_completed = 0;
  double wall_seconds = 0.0;
  unsigned threads = 1;

  /// Millions of operations per second.
  [[nodiscard]] double mops() const noexcept {
    return wall_seconds > 0 ? static_cast<double>(ops_completed) / wall_seconds / 1e6 : 0.0;
  }
};

class Stopwatch {
 public:
  using Clock = std::chrono::steady_clock;

  Stopwatch() : start_(Clock::now()) {}
  void restart() noexcept { start_ = Clock::now(); }
  [[nodiscard]] double seconds() const noexcept {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  Clock::time_point start_;
};

}  // namespace warpbench::instrument

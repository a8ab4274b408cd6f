#pragma once

// Compile-time hook policies threaded through every table. NullHooks
// compiles to nothing; ProbeHooks feeds the thread's ProbeContext; RaceHooks
// additionally lets a thread-local injector stall between a table's probe
// and write steps to widen race windows.

#include <cstdint>
#include <random>
#include <thread>

#include "warpbench/instrument/probe.hpp"
#include "warpbench/sync/lock_array.hpp"

namespace warpbench::tables {

enum class SchedPoint : std::uint8_t {
  after_lock,       // primary-bucket lock acquired (or elided)
  after_probe,      // existence scan of one bucket finished
  before_reserve,   // routing decided, about to claim a slot
  before_publish,   // slot reserved, pair not yet visible
  before_tombstone, // victim located, about to erase
};

struct NullHooks {
  static constexpr bool kCountsProbes = false;
  static void access(const void*) noexcept {}
  static void lock_access(const void*) noexcept {}
  static void point(SchedPoint) noexcept {}
};

struct ProbeHooks {
  static constexpr bool kCountsProbes = true;
  static void access(const void* p) noexcept {
    if (auto* c = instrument::current_context()) c->record_access(p);
  }
  static void lock_access(const void* p) noexcept {
    if (auto* c = instrument::current_context()) c->record_lock(p);
  }
  static void point(SchedPoint) noexcept {}
};

/// Randomized stalls at scheduling points. With probability yield_per_mille
/// per thousand the thread yields; otherwise it may spin briefly.
class DelayInjector {
 public:
  explicit DelayInjector(std::uint64_t seed, unsigned yield_per_mille = 500, unsigned max_spin = 256)
      : rng_(seed), yield_per_mille_(yield_per_mille), max_spin_(max_spin) {}

  void at(SchedPoint) {
    const auto r = rng_();
    if (r % 1000 < yield_per_mille_) {
      std::this_thread::yield();
    } else if (max_spin_) {
      const unsigned spins = static_cast<unsigned>((r >> 20) % max_spin_);
      for (unsigned i = 0; i < spins; ++i) sync::cpu_relax();
    }
  }

 private:
  std::mt19937_64 rng_;
  unsigned yield_per_mille_;
  unsigned max_spin_;
};

namespace detail {
inline thread_local DelayInjector* t_injector = nullptr;
}

class ScopedInjector {
 public:
  explicit ScopedInjector(DelayInjector& inj) noexcept : prev_(detail::t_injector) { detail::t_injector = &inj; }
  ~ScopedInjector() { detail::t_injector = prev_; }
  ScopedInjector(const ScopedInjector&) = delete;
  ScopedInjector& operator=(const ScopedInjector&) = delete;

 private:
  DelayInjector* prev_;
};

struct RaceHooks {
  static constexpr bool kCountsProbes = false;
  static void access(const void*) noexcept {}
  static void lock_access(const void*) noexcept {}
  static void point(SchedPoint p) {
    if (auto* inj = detail::t_injector) inj->at(p);
  }
};

enum class HookKind : std::uint8_t { none, probes, race };

}  // namespace warpbench::tables

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "warpbench/core/hash.hpp"
#include "warpbench/core/types.hpp"

namespace warpbench::bench {

/// Keys derived from a seeded counter through a 64-bit bijection, so a
/// stream never repeats itself. Position i of a stream is fixed by the seed;
/// unused positions beyond what was inserted serve as known-absent keys.
class KeyStream {
 public:
  explicit KeyStream(std::uint64_t seed) noexcept : base_(splitmix64(seed ^ 0x5bd1e9955bd1e995ULL)) {}

  /// Key at position i, skipping the three sentinel values.
  [[nodiscard]] Key at(std::uint64_t i) const noexcept {
    for (std::uint64_t salt = 0;; ++salt) {
      const Key k = splitmix64(base_ + (i + salt * 0x632be59bd9b4e019ULL) * 0x9e3779b97f4a7c15ULL);
      if (!is_sentinel(k)) return k;
    }
  }

 private:
  std::uint64_t base_;
};

[[nodiscard]] inline std::vector<Key> gen_uniform_keys(std::uint64_t seed, std::size_t count,
                                                       std::uint64_t offset = 0) {
  const KeyStream s(seed);
  std::vector<Key> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = s.at(offset + i);
  return out;
}

/// Small counter-based generator for per-thread randomness in workloads.
class SplitMix {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix(std::uint64_t seed) noexcept : state_(seed) {}
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_ - 0x9e3779b97f4a7c15ULL);
  }
  /// Uniform double in [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return reduce((*this)(), n); }

 private:
  std::uint64_t state_;
};

/// Zipf(n, theta) over ranks 1..n by rejection-inversion
/// (Hormann and Derflinger), O(1) per draw with no table.
class ZipfState {
 public:
  ZipfState(std::uint64_t n, double theta) : n_(n), theta_(theta) {
    if (n == 0) throw std::invalid_argument("zipf universe must be non-empty");
    if (!(theta >= 0.0)) throw std::invalid_argument("zipf theta must be >= 0");
    h_x1_ = h(1.5) - 1.0;
    h_n_ = h(static_cast<double>(n) + 0.5);
    s_ = 2.0 - h_inv(h(2.5) - std::pow(2.0, -theta_));
  }

  [[nodiscard]] std::uint64_t n() const noexcept { return n_; }
  [[nodiscard]] double theta() const noexcept { return theta_; }

  template <class Rng>
  std::uint64_t next(Rng& rng) const {
    for (;;) {
      const double u = h_n_ + uniform01(rng) * (h_x1_ - h_n_);
      const double x = h_inv(u);
      double k = std::floor(x + 0.5);
      if (k < 1.0) k = 1.0;
      else if (k > static_cast<double>(n_)) k = static_cast<double>(n_);
      if (k - x <= s_ || u >= h(k + 0.5) - std::pow(k, -theta_)) return static_cast<std::uint64_t>(k);
    }
  }

  /// Exact P(rank = k) = k^-theta / H(n, theta).
  [[nodiscard]] double probability(std::uint64_t k) const {
    double norm = 0.0;
    for (std::uint64_t i = n_; i >= 1; --i) norm += std::pow(static_cast<double>(i), -theta_);
    return std::pow(static_cast<double>(k), -theta_) / norm;
  }

 private:
  template <class Rng>
  static double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  // Integral of x^-theta, written through log1p/expm1 helpers so theta -> 1 is stable.
  [[nodiscard]] double h(double x) const noexcept {
    const double lx = std::log(x);
    return helper2((1.0 - theta_) * lx) * lx;
  }
  [[nodiscard]] double h_inv(double x) const noexcept {
    double t = x * (1.0 - theta_);
    if (t < -1.0) t = -1.0;
    return std::exp(helper1(t) * x);
  }
  // log1p(x)/x
  static double helper1(double x) noexcept { return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1.0 - x * (0.5 - x / 3.0); }
  // expm1(x)/x
  static double helper2(double x) noexcept { return std::abs(x) > 1e-8 ? std::expm1(x) / x : 1.0 + x * 0.5 * (1.0 + x / 3.0); }

  std::uint64_t n_;
  double theta_;
  double h_x1_ = 0.0;
  double h_n_ = 0.0;
  double s_ = 0.0;
};

template <class Rng>
std::uint64_t zipf_next(const ZipfState& z, Rng& rng) {
  return z.next(rng);
}

}  // namespace warpbench::bench

#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "warpbench/core/types.hpp"

namespace warpbench {

// Murmur3 64-bit finalizer.
[[nodiscard]] constexpr std::uint64_t fmix64(std::uint64_t x) noexcept {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded 64-bit mixer: two finalizer rounds keyed by an expanded seed.
[[nodiscard]] constexpr std::uint64_t seeded_hash(std::uint64_t seed, Key key) noexcept {
  const std::uint64_t s = splitmix64(seed);
  return fmix64(fmix64(key ^ s) + (s | 1) * 0x9e3779b97f4a7c15ULL);
}

/// Maps a 64-bit hash onto [0, n) using its high bits.
[[nodiscard]] constexpr std::size_t reduce(std::uint64_t h, std::size_t n) noexcept {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

/// A list of independent hash functions, one per seed.
class HashFamily {
 public:
  static constexpr std::uint64_t kDefaultSeeds[] = {
      0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
      0x082efa98ec4e6c89ULL};

  HashFamily() : seeds_(std::begin(kDefaultSeeds), std::end(kDefaultSeeds)) {}
  explicit HashFamily(std::vector<std::uint64_t> seeds) : seeds_(std::move(seeds)) {}
  HashFamily(std::initializer_list<std::uint64_t> seeds) : seeds_(seeds) {}

  [[nodiscard]] std::size_t size() const noexcept { return seeds_.size(); }
  [[nodiscard]] const std::vector<std::uint64_t>& seeds() const noexcept { return seeds_; }

  [[nodiscard]] std::uint64_t raw(std::size_t index, Key key) const noexcept {
    assert(index < seeds_.size());
    return seeded_hash(seeds_[index], key);
  }

  [[nodiscard]] std::size_t bucket(std::size_t index, Key key, std::size_t num_buckets) const noexcept {
    assert(num_buckets >= 1);
    return reduce(raw(index, key), num_buckets);
  }

  friend bool operator==(const HashFamily&, const HashFamily&) = default;

 private:
  std::vector<std::uint64_t> seeds_;
};

[[nodiscard]] inline std::size_t hash(const HashFamily& family, std::size_t index, Key key,
                                      std::size_t num_buckets) noexcept {
  return family.bucket(index, key, num_buckets);
}

/// Fingerprint from a primary hash value: its low 16 bits, with 0 remapped
/// to 1 so computed tags never collide with the empty tag.
[[nodiscard]] constexpr Tag tag_from_hash(std::uint64_t primary_hash) noexcept {
  const auto t = static_cast<Tag>(primary_hash & 0xffffu);
  return t == kEmptyTag ? Tag{1} : t;
}

[[nodiscard]] inline Tag fingerprint(const HashFamily& family, Key key) noexcept {
  return tag_from_hash(family.raw(0, key));
}

}  // namespace warpbench

#pragma once

// Reserve-then-publish protocol for 16-byte slots.
//
// Writers claim a slot by CAS-ing its key word to kReservedKey, then make the
// pair visible with one 16-byte release store. Readers take one 16-byte
// acquire snapshot, so a reader never pairs a key with another key's value.
//
// On x86-64 CPUs that enumerate AVX, aligned 16-byte vector loads and stores
// are single-copy atomic; TSO gives them acquire/release ordering once the
// compiler is fenced. Elsewhere the split fallback stores the value word
// before the key word (release) and readers load key, value, key (acquire),
// retrying when the key changed under them.

#include <atomic>
#include <cstdint>
#include <string_view>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define WARPBENCH_HAS_SSE_PAIR 1
#else
#define WARPBENCH_HAS_SSE_PAIR 0
#endif

#include "warpbench/core/types.hpp"

namespace warpbench::sync {

enum class PairAtomicity : std::uint8_t { wide_sse128, split_fallback };

[[nodiscard]] inline PairAtomicity detect_pair_atomicity() noexcept {
#if WARPBENCH_HAS_SSE_PAIR && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx")) return PairAtomicity::wide_sse128;
#endif
  return PairAtomicity::split_fallback;
}

namespace detail {
inline PairAtomicity g_atomicity = detect_pair_atomicity();
}

[[nodiscard]] inline PairAtomicity pair_atomicity() noexcept { return detail::g_atomicity; }

/// Test hook: forces the split path even where wide stores exist.
inline void force_pair_atomicity(PairAtomicity a) noexcept {
#if !WARPBENCH_HAS_SSE_PAIR
  a = PairAtomicity::split_fallback;
#endif
  detail::g_atomicity = a;
}

[[nodiscard]] constexpr std::string_view to_string(PairAtomicity a) noexcept {
  return a == PairAtomicity::wide_sse128 ? "wide-atomic(sse128)" : "fallback(split64)";
}

struct SlotView {
  SlotState state;
  Key key;
  Value value;
};

[[nodiscard]] inline std::atomic_ref<std::uint64_t> key_word(Slot& s) noexcept {
  return std::atomic_ref<std::uint64_t>(s.key);
}
[[nodiscard]] inline std::atomic_ref<std::uint64_t> value_word(Slot& s) noexcept {
  return std::atomic_ref<std::uint64_t>(s.value);
}
[[nodiscard]] inline std::atomic_ref<std::uint64_t> key_word(const Slot& s) noexcept {
  return std::atomic_ref<std::uint64_t>(const_cast<Slot&>(s).key);
}
[[nodiscard]] inline std::atomic_ref<std::uint64_t> value_word(const Slot& s) noexcept {
  return std::atomic_ref<std::uint64_t>(const_cast<Slot&>(s).value);
}

/// Current key word, acquire-ordered. Cheap state check without the value.
[[nodiscard]] inline Key load_key(const Slot& s, Mode mode = Mode::concurrent) noexcept {
  return key_word(s).load(mode == Mode::concurrent ? std::memory_order_acquire
                                                   : std::memory_order_relaxed);
}

/// Claims the slot: key word `expect` -> kReservedKey. `expect` must be
/// kEmptyKey or kTombstoneKey. True iff this caller won.
[[nodiscard]] inline bool reserve(Slot& s, SlotState expect) noexcept {
  Key expected = expect == SlotState::empty ? kEmptyKey : kTombstoneKey;
  if (expect != SlotState::empty && expect != SlotState::tombstone) return false;
  return key_word(s).compare_exchange_strong(expected, kReservedKey, std::memory_order_acq_rel,
                                             std::memory_order_relaxed);
}

/// Claims a slot in whichever free state it is currently in.
[[nodiscard]] inline bool try_claim(Slot& s, Key observed) noexcept {
  if (observed == kEmptyKey) return reserve(s, SlotState::empty);
  if (observed == kTombstoneKey) return reserve(s, SlotState::tombstone);
  return false;
}

/// Makes (key, value) visible in a slot the caller reserved.
inline void publish(Slot& s, Key key, Value value, Mode mode = Mode::concurrent) noexcept {
  if (mode == Mode::phased) {
    value_word(s).store(value, std::memory_order_relaxed);
    key_word(s).store(key, std::memory_order_relaxed);
    return;
  }
#if WARPBENCH_HAS_SSE_PAIR
  if (pair_atomicity() == PairAtomicity::wide_sse128) {
    const __m128i pair = _mm_set_epi64x(static_cast<long long>(value), static_cast<long long>(key));
    std::atomic_signal_fence(std::memory_order_release);
    _mm_store_si128(reinterpret_cast<__m128i*>(&s), pair);
    std::atomic_signal_fence(std::memory_order_seq_cst);
    return;
  }
#endif
  value_word(s).store(value, std::memory_order_relaxed);
  key_word(s).store(key, std::memory_order_release);
}

/// One consistent view of the slot.
[[nodiscard]] inline SlotView snapshot(const Slot& s, Mode mode = Mode::concurrent) noexcept {
  if (mode == Mode::phased) {
    const Key k = key_word(s).load(std::memory_order_relaxed);
    const Value v = value_word(s).load(std::memory_order_relaxed);
    return {classify(k), k, v};
  }
#if WARPBENCH_HAS_SSE_PAIR
  if (pair_atomicity() == PairAtomicity::wide_sse128) {
    std::atomic_signal_fence(std::memory_order_seq_cst);
    const __m128i pair = _mm_load_si128(reinterpret_cast<const __m128i*>(&s));
    std::atomic_signal_fence(std::memory_order_acquire);
    const auto k = static_cast<Key>(_mm_cvtsi128_si64(pair));
    const auto v = static_cast<Value>(_mm_cvtsi128_si64(_mm_unpackhi_epi64(pair, pair)));
    return {classify(k), k, v};
  }
#endif
  for (;;) {
    const Key k = key_word(s).load(std::memory_order_acquire);
    const Value v = value_word(s).load(std::memory_order_acquire);
    if (key_word(s).load(std::memory_order_relaxed) == k) return {classify(k), k, v};
  }
}

/// Replaces the value of an occupied slot by merge(old, incoming) with one
/// word-sized CAS loop; readers see the old or the new value, never a blend.
template <class Merge>
Value update_value(Slot& s, Value incoming, Merge&& merge, Mode mode = Mode::concurrent) noexcept {
  auto word = value_word(s);
  Value old = word.load(std::memory_order_relaxed);
  Value next = merge(old, incoming);
  if (mode == Mode::phased) {
    // Same-key updates in one phase still race when locks are elided.
    while (!word.compare_exchange_weak(old, next, std::memory_order_relaxed)) next = merge(old, incoming);
    return next;
  }
  while (!word.compare_exchange_weak(old, next, std::memory_order_release, std::memory_order_relaxed))
    next = merge(old, incoming);
  return next;
}

/// OCCUPIED -> TOMBSTONE. Value bits are left in place.
inline void tombstone(Slot& s, Mode mode = Mode::concurrent) noexcept {
  key_word(s).store(kTombstoneKey,
                    mode == Mode::concurrent ? std::memory_order_release : std::memory_order_relaxed);
}

/// Abandons a claim. The slot becomes a tombstone even if it was empty:
/// EMPTY is never re-entered, so scans may stop at the first EMPTY slot.
inline void unreserve(Slot& s) noexcept { key_word(s).store(kTombstoneKey, std::memory_order_release); }

}  // namespace warpbench::sync

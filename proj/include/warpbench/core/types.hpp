#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace warpbench {

using Key = std::uint64_t;
using Value = std::uint64_t;
using Tag = std::uint16_t;

// Reserved key words. Any other 64-bit pattern is a legal key.
inline constexpr Key kEmptyKey = 0;
inline constexpr Key kTombstoneKey = std::numeric_limits<std::uint64_t>::max();
inline constexpr Key kReservedKey = std::numeric_limits<std::uint64_t>::max() - 1;

inline constexpr Tag kEmptyTag = 0;

[[nodiscard]] constexpr bool is_sentinel(Key k) noexcept {
  return k == kEmptyKey || k == kTombstoneKey || k == kReservedKey;
}

class invalid_key_error : public std::invalid_argument {
 public:
  explicit invalid_key_error(Key k)
      : std::invalid_argument("reserved key value " + std::to_string(k)), key_(k) {}
  [[nodiscard]] Key key() const noexcept { return key_; }

 private:
  Key key_;
};

inline void check_key(Key k) {
  if (is_sentinel(k)) throw invalid_key_error(k);
}

/// One key/value pair. The 16-byte aligned pair is the unit of atomic
/// publication; see sync/slot.hpp.
struct alignas(16) Slot {
  Key key = kEmptyKey;
  Value value = 0;
};
static_assert(sizeof(Slot) == 16);

enum class SlotState : std::uint8_t { empty, reserved, occupied, tombstone };

[[nodiscard]] constexpr SlotState classify(Key k) noexcept {
  switch (k) {
    case kEmptyKey: return SlotState::empty;
    case kReservedKey: return SlotState::reserved;
    case kTombstoneKey: return SlotState::tombstone;
    default: return SlotState::occupied;
  }
}

enum class Design : std::uint8_t {
  double_hashing,
  double_md,
  p2,
  p2_md,
  iceberg,
  iceberg_md,
  cuckoo,
  chaining,
  unsafe_reference,
};

inline constexpr Design kAllDesigns[] = {
    Design::double_hashing, Design::double_md, Design::p2,      Design::p2_md,
    Design::iceberg,        Design::iceberg_md, Design::cuckoo, Design::chaining,
    Design::unsafe_reference,
};

// The eight designs that synchronize correctly.
inline constexpr Design kConcurrentDesigns[] = {
    Design::double_hashing, Design::double_md, Design::p2,     Design::p2_md,
    Design::iceberg,        Design::iceberg_md, Design::cuckoo, Design::chaining,
};

// Designs whose keys never move between insert and erase.
inline constexpr Design kStableDesigns[] = {
    Design::double_hashing, Design::double_md, Design::p2,      Design::p2_md,
    Design::iceberg,        Design::iceberg_md, Design::chaining,
};

[[nodiscard]] constexpr std::string_view to_string(Design d) noexcept {
  switch (d) {
    case Design::double_hashing: return "double";
    case Design::double_md: return "double_md";
    case Design::p2: return "p2";
    case Design::p2_md: return "p2_md";
    case Design::iceberg: return "iceberg";
    case Design::iceberg_md: return "iceberg_md";
    case Design::cuckoo: return "cuckoo";
    case Design::chaining: return "chaining";
    case Design::unsafe_reference: return "unsafe_reference";
  }
  return "?";
}

[[nodiscard]] inline Design parse_design(std::string_view s) {
  for (Design d : kAllDesigns)
    if (to_string(d) == s) return d;
  throw std::invalid_argument("unknown design '" + std::string(s) + "'");
}

[[nodiscard]] constexpr bool has_metadata(Design d) noexcept {
  return d == Design::double_md || d == Design::p2_md || d == Design::iceberg_md;
}

[[nodiscard]] constexpr bool is_open_addressing(Design d) noexcept {
  return d != Design::chaining;
}

[[nodiscard]] constexpr bool is_stable(Design d) noexcept {
  return d != Design::cuckoo;
}

/// Concurrent: locks and acquire/release publication. Phased: the caller
/// guarantees one operation kind per phase with a barrier between phases, so
/// locks are elided and reads are relaxed.
enum class Mode : std::uint8_t { concurrent, phased };

[[nodiscard]] constexpr std::string_view to_string(Mode m) noexcept {
  return m == Mode::concurrent ? "concurrent" : "phased";
}

[[nodiscard]] inline Mode parse_mode(std::string_view s) {
  if (s == "concurrent") return Mode::concurrent;
  if (s == "phased") return Mode::phased;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

enum class UpsertStatus : std::uint8_t { inserted, updated, full };

[[nodiscard]] constexpr std::string_view to_string(UpsertStatus s) noexcept {
  switch (s) {
    case UpsertStatus::inserted: return "inserted";
    case UpsertStatus::updated: return "updated";
    case UpsertStatus::full: return "full";
  }
  return "?";
}

}  // namespace warpbench

#pragma once

#include <bit>

#include "warpbench/core/types.hpp"

namespace warpbench {

/// Upsert merge callback: (existing value, incoming value) -> stored value.
using MergeFn = Value (*)(Value existing, Value incoming);

namespace merge {

// Insert-if-unique.
inline Value keep_existing(Value existing, Value) noexcept { return existing; }
inline Value replace(Value, Value incoming) noexcept { return incoming; }
inline Value add(Value existing, Value incoming) noexcept { return existing + incoming; }
// Values carrying IEEE doubles.
inline Value add_f64(Value existing, Value incoming) noexcept {
  return std::bit_cast<Value>(std::bit_cast<double>(existing) + std::bit_cast<double>(incoming));
}

}  // namespace merge
}  // namespace warpbench

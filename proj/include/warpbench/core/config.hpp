#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "warpbench/core/hash.hpp"
#include "warpbench/core/types.hpp"

namespace warpbench {

// Pairs per chaining node: 7 pairs plus the link fill one 128-byte line.
inline constexpr std::size_t kChainNodePairs = 7;

struct TableConfig {
  Design design = Design::p2_md;
  std::size_t capacity_slots = 1'000'000;
  std::size_t bucket_size = 0;  // 0 selects the design default
  std::size_t line_bytes = 128;
  std::size_t probe_cap = 512;  // buckets visited before an open-address probe gives up
  Mode mode = Mode::concurrent;
  HashFamily seeds;
  double iceberg_front_fraction = 0.83;
  double shortcut_threshold = 0.75;
  std::size_t cuckoo_ways = 3;
  std::size_t cuckoo_path_depth = 5;

  friend bool operator==(const TableConfig&, const TableConfig&) = default;
};

[[nodiscard]] constexpr std::size_t default_bucket_size(Design d) noexcept {
  switch (d) {
    case Design::double_hashing:
    case Design::cuckoo: return 8;
    case Design::chaining: return kChainNodePairs;
    default: return 32;
  }
}

[[nodiscard]] constexpr std::size_t seeds_required(const TableConfig& cfg) noexcept {
  switch (cfg.design) {
    case Design::chaining: return 1;
    case Design::iceberg:
    case Design::iceberg_md: return 3;
    case Design::cuckoo: return cfg.cuckoo_ways;
    default: return 2;
  }
}

class config_error : public std::invalid_argument {
 public:
  explicit config_error(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}
  [[nodiscard]] const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& ps) {
    std::string out = "invalid table config:";
    for (const auto& p : ps) out += "\n  - " + p;
    return out;
  }
  std::vector<std::string> problems_;
};

/// Fills in design defaults and checks every layout invariant. Throws
/// config_error naming each violation.
[[nodiscard]] inline TableConfig validate_config(TableConfig cfg) {
  std::vector<std::string> problems;
  if (cfg.bucket_size == 0) cfg.bucket_size = default_bucket_size(cfg.design);

  if (cfg.line_bytes < 16 || (cfg.line_bytes & (cfg.line_bytes - 1)) != 0)
    problems.push_back("line_bytes must be a power of two >= 16 (got " +
                       std::to_string(cfg.line_bytes) + ")");

  if (cfg.design == Design::chaining) {
    if (cfg.bucket_size != kChainNodePairs)
      problems.push_back("chaining nodes hold exactly 7 pairs (bucket_size=" +
                         std::to_string(cfg.bucket_size) + ")");
    else if (cfg.capacity_slots % kChainNodePairs != 0)
      cfg.capacity_slots += kChainNodePairs - cfg.capacity_slots % kChainNodePairs;
  } else if (problems.empty()) {
    const std::size_t bytes = cfg.bucket_size * sizeof(Slot);
    if (!(bytes % cfg.line_bytes == 0 || 2 * bytes == cfg.line_bytes))
      problems.push_back("bucket_size " + std::to_string(cfg.bucket_size) + " x 16 bytes is neither a "
                         "multiple nor half of line_bytes " + std::to_string(cfg.line_bytes));
  }
  if (cfg.capacity_slots == 0) problems.push_back("capacity_slots must be positive");
  if (cfg.bucket_size != 0 && cfg.capacity_slots % cfg.bucket_size != 0)
    problems.push_back("capacity_slots " + std::to_string(cfg.capacity_slots) +
                       " is not a multiple of bucket_size " + std::to_string(cfg.bucket_size));
  if (cfg.probe_cap == 0) problems.push_back("probe_cap must be positive");
  if (cfg.design == Design::cuckoo && (cfg.cuckoo_ways < 2 || cfg.cuckoo_ways > 8))
    problems.push_back("cuckoo_ways must be in [2, 8]");
  if (cfg.design == Design::cuckoo && cfg.cuckoo_path_depth == 0)
    problems.push_back("cuckoo_path_depth must be positive");
  if (cfg.seeds.size() < seeds_required(cfg))
    problems.push_back("design " + std::string(to_string(cfg.design)) + " needs " +
                       std::to_string(seeds_required(cfg)) + " seeds, got " +
                       std::to_string(cfg.seeds.size()));
  if (!(cfg.iceberg_front_fraction > 0.0 && cfg.iceberg_front_fraction < 1.0))
    problems.push_back("iceberg_front_fraction must be in (0, 1)");
  if (!(cfg.shortcut_threshold > 0.0 && cfg.shortcut_threshold <= 1.0))
    problems.push_back("shortcut_threshold must be in (0, 1]");
  if ((cfg.design == Design::iceberg || cfg.design == Design::iceberg_md) && cfg.bucket_size != 0 &&
      cfg.capacity_slots / cfg.bucket_size < 2)
    problems.push_back("iceberg needs at least two buckets");

  if (!problems.empty()) throw config_error(std::move(problems));
  return cfg;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  s = trim(s);
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::invalid_argument("bad integer for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

inline double parse_double(std::string_view s, std::string_view what) {
  const std::string str(trim(s));
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(str, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != str.size())
    throw std::invalid_argument("bad number for " + std::string(what) + ": '" + str + "'");
  return v;
}

}  // namespace detail

/// Applies one key=value setting. Throws on unknown keys or malformed values.
inline void apply_setting(TableConfig& cfg, std::string_view key, std::string_view value) {
  using detail::parse_double;
  using detail::parse_u64;
  key = detail::trim(key);
  value = detail::trim(value);
  if (key == "design") cfg.design = parse_design(value);
  else if (key == "capacity_slots") cfg.capacity_slots = parse_u64(value, key);
  else if (key == "bucket_size") cfg.bucket_size = parse_u64(value, key);
  else if (key == "line_bytes") cfg.line_bytes = parse_u64(value, key);
  else if (key == "probe_cap") cfg.probe_cap = parse_u64(value, key);
  else if (key == "mode") cfg.mode = parse_mode(value);
  else if (key == "seeds") {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= value.size()) {
      auto comma = value.find(',', start);
      if (comma == std::string_view::npos) comma = value.size();
      seeds.push_back(parse_u64(value.substr(start, comma - start), key));
      start = comma + 1;
    }
    cfg.seeds = HashFamily(std::move(seeds));
  } else if (key == "iceberg_front_fraction") cfg.iceberg_front_fraction = parse_double(value, key);
  else if (key == "shortcut_threshold") cfg.shortcut_threshold = parse_double(value, key);
  else if (key == "cuckoo_ways") cfg.cuckoo_ways = parse_u64(value, key);
  else if (key == "cuckoo_path_depth") cfg.cuckoo_path_depth = parse_u64(value, key);
  else throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

/// Parses the flat key=value config format on top of `base`. '#' starts a
/// comment; blank lines are ignored.
[[nodiscard]] inline TableConfig parse_config(std::istream& in, TableConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = line;
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    try {
      apply_setting(base, sv.substr(0, eq), sv.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

/// Renders every field in the same format parse_config reads.
[[nodiscard]] inline std::string to_text(const TableConfig& cfg) {
  std::ostringstream os;
  os << "design=" << to_string(cfg.design) << '\n'
     << "capacity_slots=" << cfg.capacity_slots << '\n'
     << "bucket_size=" << cfg.bucket_size << '\n'
     << "line_bytes=" << cfg.line_bytes << '\n'
     << "probe_cap=" << cfg.probe_cap << '\n'
     << "mode=" << to_string(cfg.mode) << '\n'
     << "seeds=";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    os << (i ? "," : "") << "0x" << std::hex << cfg.seeds.seeds()[i] << std::dec;
  os << '\n'
     << "iceberg_front_fraction=" << cfg.iceberg_front_fraction << '\n'
     << "shortcut_threshold=" << cfg.shortcut_threshold << '\n'
     << "cuckoo_ways=" << cfg.cuckoo_ways << '\n'
     << "cuckoo_path_depth=" << cfg.cuckoo_path_depth << '\n';
  return os.str();
}

}  // namespace warpbench

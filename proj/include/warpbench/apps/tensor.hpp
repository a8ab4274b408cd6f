#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpbench/bench/pool.hpp"
#include "warpbench/tables/any_table.hpp"

namespace warpbench::apps {

class tns_error : public std::runtime_error {
 public:
  tns_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sparse tensor in coordinate form, 0-based. Coordinates are stored flat,
/// `order()` per entry.
struct CooTensor {
  std::vector<std::uint64_t> dims;
  std::vector<std::uint64_t> coords;
  std::vector<double> values;

  [[nodiscard]] std::size_t order() const noexcept { return dims.size(); }
  [[nodiscard]] std::size_t nnz() const noexcept { return values.size(); }
  [[nodiscard]] const std::uint64_t* coord(std::size_t i) const noexcept { return coords.data() + i * order(); }

  void push(const std::vector<std::uint64_t>& c, double v) {
    coords.insert(coords.end(), c.begin(), c.end());
    values.push_back(v);
  }

  /// Sorts entries lexicographically and sums duplicate coordinates.
  void canonicalize() {
    const std::size_t n = order();
    std::vector<std::size_t> idx(nnz());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(coord(a), coord(a) + n, coord(b), coord(b) + n);
    });
    std::vector<std::uint64_t> c2;
    std::vector<double> v2;
    for (std::size_t i : idx) {
      if (!v2.empty() && std::equal(coord(i), coord(i) + n, c2.end() - static_cast<std::ptrdiff_t>(n))) {
        v2.back() += values[i];
      } else {
        c2.insert(c2.end(), coord(i), coord(i) + n);
        v2.push_back(values[i]);
      }
    }
    coords = std::move(c2);
    values = std::move(v2);
  }

  friend bool operator==(const CooTensor&, const CooTensor&) = default;
};

/// Reads FROSTT .tns text: per line, 1-based indices then a value. Blank
/// lines and '#' comments are skipped. Without `dims`, each extent is the
/// largest index seen in that mode. Duplicate coordinates are summed.
inline CooTensor parse_tns(std::istream& in, std::optional<std::vector<std::uint64_t>> dims = std::nullopt) {
  CooTensor t;
  std::optional<std::size_t> arity;
  if (dims) arity = dims->size() + 1;
  std::vector<std::uint64_t> maxes;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> tok;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    tok.clear();
    for (std::string w; ls >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    if (tok.size() < 2) throw tns_error(lineno, "expected at least one index and a value");
    if (!arity) arity = tok.size();
    if (tok.size() != *arity)
      throw tns_error(lineno, "expected " + std::to_string(*arity) + " fields, found " + std::to_string(tok.size()));
    const std::size_t order = *arity - 1;
    if (maxes.empty()) maxes.assign(order, 0);
    std::vector<std::uint64_t> c(order);
    for (std::size_t m = 0; m < order; ++m) {
      std::uint64_t v = 0;
      const auto& s = tok[m];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) throw tns_error(lineno, "bad index '" + s + "'");
      if (v == 0) throw tns_error(lineno, "indices are 1-based, got 0");
      if (dims && v > (*dims)[m])
        throw tns_error(lineno, "index " + s + " exceeds extent " + std::to_string((*dims)[m]));
      c[m] = v - 1;
      maxes[m] = std::max(maxes[m], v);
    }
    double value = 0;
    try {
      std::size_t used = 0;
      value = std::stod(tok.back(), &used);
      if (used != tok.back().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw tns_error(lineno, "bad value '" + tok.back() + "'");
    }
    t.push(c, value);
  }
  t.dims = dims ? *dims : maxes;
  t.canonicalize();
  return t;
}

inline void write_tns(std::ostream& out, const CooTensor& t) {
  char buf[32];
  for (std::size_t i = 0; i < t.nnz(); ++i) {
    for (std::size_t m = 0; m < t.order(); ++m) out << t.coord(i)[m] + 1 << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", t.values[i]);
    out << buf << '\n';
  }
}

/// Packs coordinates of selected modes into one integer, ceil(log2(extent))
/// bits per mode, first mode in the lowest bits.
class CoordPacker {
 public:
  CoordPacker() = default;
  explicit CoordPacker(const std::vector<std::uint64_t>& extents) {
    for (auto e : extents) {
      const unsigned b = e <= 1 ? 0u : static_cast<unsigned>(std::bit_width(e - 1));
      shift_.push_back(bits_);
      width_.push_back(b);
      bits_ += b;
    }
  }

  [[nodiscard]] unsigned bits() const noexcept { return bits_; }
  [[nodiscard]] std::size_t modes() const noexcept { return width_.size(); }

  template <class Get>
  [[nodiscard]] std::uint64_t pack(Get&& coord_of_mode) const {
    std::uint64_t out = 0;
    for (std::size_t m = 0; m < width_.size(); ++m) out |= coord_of_mode(m) << shift_[m];
    return out;
  }

  [[nodiscard]] std::uint64_t unpack(std::uint64_t packed, std::size_t m) const noexcept {
    const std::uint64_t mask = width_[m] == 64 ? ~0ULL : ((std::uint64_t{1} << width_[m]) - 1);
    return (packed >> shift_[m]) & mask;
  }

 private:
  std::vector<unsigned> shift_;
  std::vector<unsigned> width_;
  unsigned bits_ = 0;
};

struct ContractOptions {
  Design design = Design::p2_md;
  double max_load = 0.6;
};

/// Contracts x's modes `x_modes` against y's `y_modes` pairwise. Output
/// modes are x's free modes in order, then y's free modes in order.
///
/// Y is grouped by its contracted coordinates; a phased-mode table maps each
/// contracted key to its group. X entries are streamed across the pool and
/// every matching product is accumulated into a concurrent table with an
/// additive upsert. The result is sorted by coordinate; exact zeros are
/// dropped.
inline CooTensor contract(const CooTensor& x, const CooTensor& y, const std::vector<std::size_t>& x_modes,
                          const std::vector<std::size_t>& y_modes, bench::ThreadPool& pool,
                          const ContractOptions& opt = {}) {
  if (x_modes.size() != y_modes.size()) throw contract_error("x_modes and y_modes differ in length");
  std::vector<bool> xc(x.order(), false), yc(y.order(), false);
  std::vector<std::uint64_t> c_ext;
  for (std::size_t i = 0; i < x_modes.size(); ++i) {
    const auto a = x_modes[i], b = y_modes[i];
    if (a >= x.order() || b >= y.order()) throw contract_error("contracted mode out of range");
    if (xc[a] || yc[b]) throw contract_error("mode contracted twice");
    if (x.dims[a] != y.dims[b])
      throw contract_error("dimension mismatch: x mode " + std::to_string(a) + " has extent " +
                           std::to_string(x.dims[a]) + ", y mode " + std::to_string(b) + " has " +
                           std::to_string(y.dims[b]));
    xc[a] = yc[b] = true;
    c_ext.push_back(x.dims[a]);
  }
  std::vector<std::size_t> x_free, y_free;
  std::vector<std::uint64_t> out_dims;
  for (std::size_t m = 0; m < x.order(); ++m)
    if (!xc[m]) x_free.push_back(m), out_dims.push_back(x.dims[m]);
  for (std::size_t m = 0; m < y.order(); ++m)
    if (!yc[m]) y_free.push_back(m), out_dims.push_back(y.dims[m]);

  const CoordPacker cpack(c_ext), opack(out_dims);
  if (cpack.bits() > 63 || opack.bits() > 63 || cpack.bits() + opack.bits() > 64)
    throw contract_error("coordinate packing overflow: " + std::to_string(opack.bits()) + " free + " +
                         std::to_string(cpack.bits()) + " contracted bits");

  CooTensor out;
  out.dims = out_dims;
  if (x.nnz() == 0 || y.nnz() == 0) return out;

  // Group Y by contracted key.
  std::vector<std::uint64_t> ykey(y.nnz());
  for (std::size_t i = 0; i < y.nnz(); ++i)
    ykey[i] = cpack.pack([&](std::size_t m) { return y.coord(i)[y_modes[m]]; });
  std::vector<std::size_t> order(y.nnz());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ykey[a] < ykey[b]; });
  std::vector<std::size_t> group_start{0};
  for (std::size_t i = 1; i < order.size(); ++i)
    if (ykey[order[i]] != ykey[order[i - 1]]) group_start.push_back(i);
  group_start.push_back(order.size());
  const std::size_t groups = group_start.size() - 1;

  auto sized = [&](std::size_t n) {
    TableConfig cfg;
    cfg.design = opt.design;
    cfg = validate_config(cfg);
    const auto want = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / opt.max_load)) + 2 * cfg.bucket_size;
    cfg.capacity_slots = (want + cfg.bucket_size - 1) / cfg.bucket_size * cfg.bucket_size;
    return cfg;
  };

  TableConfig icfg = sized(groups);
  icfg.mode = Mode::phased;
  auto index = make_table(icfg);
  pool.run([&](unsigned t) {
    const auto [b, e] = bench::share(groups, t, pool.size());
    for (std::size_t g = b; g < e; ++g)
      if (index->upsert(ykey[order[group_start[g]]] + 1, g, merge::keep_existing) == UpsertStatus::full)
        throw contract_error("index table full");
  });

  // Upper bound on distinct outputs: products, capped by the dense size.
  std::uint64_t products = 0;
  for (std::size_t i = 0; i < x.nnz(); ++i) {
    const auto ck = cpack.pack([&](std::size_t m) { return x.coord(i)[x_modes[m]]; });
    if (const auto g = index->query(ck + 1)) products += group_start[*g + 1] - group_start[*g];
  }
  long double dense = 1;
  for (auto d : out_dims) dense *= static_cast<long double>(d);
  const auto bound = static_cast<std::size_t>(std::min<long double>(static_cast<long double>(products), dense));
  if (bound == 0) return out;
  auto acc = make_table(sized(bound));

  pool.run([&](unsigned t) {
    const auto [b, e] = bench::share(x.nnz(), t, pool.size());
    for (std::size_t i = b; i < e; ++i) {
      const std::uint64_t* xi = x.coord(i);
      const auto ck = cpack.pack([&](std::size_t m) { return xi[x_modes[m]]; });
      const auto g = index->query(ck + 1);
      if (!g) continue;
      for (std::size_t j = group_start[*g]; j < group_start[*g + 1]; ++j) {
        const std::uint64_t* yj = y.coord(order[j]);
        const auto ok = opack.pack([&](std::size_t m) {
          return m < x_free.size() ? xi[x_free[m]] : yj[y_free[m - x_free.size()]];
        });
        const double prod = x.values[i] * y.values[order[j]];
        if (acc->upsert(ok + 1, std::bit_cast<Value>(prod), merge::add_f64) == UpsertStatus::full)
          throw contract_error("accumulator table full");
      }
    }
  });

  std::vector<std::pair<std::uint64_t, double>> drained;
  acc->for_each([&](Key k, Value v, const Slot*) {
    const double d = std::bit_cast<double>(v);
    if (d != 0.0) drained.emplace_back(k - 1, d);
  });
  std::sort(drained.begin(), drained.end());
  std::vector<std::uint64_t> c(out_dims.size());
  for (const auto& [k, v] : drained) {
    for (std::size_t m = 0; m < c.size(); ++m) c[m] = opack.unpack(k, m);
    out.push(c, v);
  }
  return out;
}

}  // namespace warpbench::apps

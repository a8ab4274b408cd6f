#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace warpbench::instrument {

inline constexpr std::string_view kCsvColumns[] = {
    "design", "mode", "capacity", "line_bytes", "phase", "op",
    "load_factor", "threads", "ops", "seconds", "mops", "probes_mean",
};

struct CsvRow {
  std::string design;
  std::string mode;
  std::uint64_t capacity = 0;
  std::uint64_t line_bytes = 128;
  std::string phase;
  std::string op;
  double load_factor = 0.0;
  unsigned threads = 1;
  std::uint64_t ops = 0;
  double seconds = 0.0;
  double mops = 0.0;
  std::optional<double> probes_mean;
  std::vector<std::string> extra;  // values for the writer's extra columns, in order
};

[[nodiscard]] inline std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Writes '#' metadata lines, the header (standard columns then any extra
/// ones), then rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out, std::vector<std::string> extra_columns = {})
      : out_(&out), extra_(std::move(extra_columns)) {}

  void meta(std::string_view key, std::string_view value) {
    if (header_done_) throw std::logic_error("CSV metadata must precede the header");
    *out_ << "# " << key << ": " << value << '\n';
  }

  void header() {
    if (header_done_) return;
    bool first = true;
    for (auto c : kCsvColumns) {
      *out_ << (first ? "" : ",") << c;
      first = false;
    }
    for (const auto& c : extra_) *out_ << ',' << c;
    *out_ << '\n';
    header_done_ = true;
  }

  void row(const CsvRow& r) {
    header();
    if (r.extra.size() != extra_.size())
      throw std::invalid_argument("CSV row has " + std::to_string(r.extra.size()) + " extra values, expected " +
                                  std::to_string(extra_.size()));
    *out_ << r.design << ',' << r.mode << ',' << r.capacity << ',' << r.line_bytes << ',' << r.phase << ','
          << r.op << ',' << format_fixed(r.load_factor, 4) << ',' << r.threads << ',' << r.ops << ','
          << format_fixed(r.seconds, 6) << ',' << format_fixed(r.mops, 4) << ','
          << (r.probes_mean ? format_fixed(*r.probes_mean, 4) : std::string("nan"));
    for (const auto& e : r.extra) *out_ << ',' << e;
    *out_ << '\n';
    ++rows_;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }

 private:
  std::ostream* out_;
  std::vector<std::string> extra_;
  bool header_done_ = false;
  std::size_t rows_ = 0;
};

}  // namespace warpbench::instrument

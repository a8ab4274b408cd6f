#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpbench/bench/load.hpp"
#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/workload.hpp"

namespace warpbench::apps {

enum class YcsbWorkload : char { A = 'A', B = 'B', C = 'C' };

[[nodiscard]] constexpr double update_fraction(YcsbWorkload w) noexcept {
  switch (w) {
    case YcsbWorkload::A: return 0.50;
    case YcsbWorkload::B: return 0.05;
    case YcsbWorkload::C: return 0.0;
  }
  return 0.0;
}

[[nodiscard]] inline YcsbWorkload parse_workload(const std::string& s) {
  if (s == "A" || s == "a") return YcsbWorkload::A;
  if (s == "B" || s == "b") return YcsbWorkload::B;
  if (s == "C" || s == "c") return YcsbWorkload::C;
  throw std::invalid_argument("unknown YCSB workload '" + s + "' (expected A, B or C)");
}

struct YcsbSpec {
  YcsbWorkload workload = YcsbWorkload::A;
  std::size_t universe = 1'000'000;
  std::uint64_t ops = 1'000'000;
  double theta = 0.99;
  std::uint64_t seed = 1;
  double table_load = 0.85;  // universe / capacity
};

/// Exact op mix: round(ops * update_fraction) updates, the rest queries,
/// shuffled; keys drawn by Zipf rank over the universe.
[[nodiscard]] inline std::vector<bench::Op> ycsb_ops(const YcsbSpec& spec, const std::vector<Key>& universe) {
  const auto updates = static_cast<std::uint64_t>(std::llround(update_fraction(spec.workload) * static_cast<double>(spec.ops)));
  const bench::ZipfState z(universe.size(), spec.theta);
  bench::SplitMix rng(spec.seed ^ 0x2545f4914f6cdd1dULL);
  std::vector<bench::Op> ops(spec.ops);
  for (std::uint64_t i = 0; i < spec.ops; ++i)
    ops[i] = {i < updates ? bench::OpKind::update : bench::OpKind::query_pos, universe[z.next(rng) - 1]};
  std::shuffle(ops.begin(), ops.end(), rng);
  return ops;
}

struct YcsbResult {
  std::uint64_t updates = 0;
  std::uint64_t queries = 0;
  std::uint64_t query_misses = 0;
  std::uint64_t full_errors = 0;
  double seconds = 0.0;
  double mops = 0.0;
  std::vector<instrument::CsvRow> rows;
};

/// Preloads the universe, then runs the mix in one concurrent phase.
inline YcsbResult run_ycsb(const YcsbSpec& spec, const TableConfig& table_cfg, bench::ThreadPool& pool) {
  TableConfig cfg = validate_config(table_cfg);
  const auto want = static_cast<std::size_t>(std::ceil(static_cast<double>(spec.universe) / spec.table_load));
  cfg.capacity_slots = (want + cfg.bucket_size - 1) / cfg.bucket_size * cfg.bucket_size;
  auto table = make_table(cfg);
  const auto universe = bench::gen_uniform_keys(spec.seed, spec.universe);
  const auto pre = bench::run_pass(pool, *table, universe, bench::OpKind::insert);
  YcsbResult res;
  res.full_errors = pre.failed(bench::OpKind::insert);

  const auto ops = ycsb_ops(spec, universe);
  const auto run = bench::run_mixed(pool, *table, ops);
  res.updates = run.kind_ops[static_cast<std::size_t>(bench::OpKind::update)];
  res.queries = run.kind_ops[static_cast<std::size_t>(bench::OpKind::query_pos)];
  res.query_misses = run.failed(bench::OpKind::query_pos);
  res.full_errors += run.failed(bench::OpKind::update);
  res.seconds = run.seconds;
  res.mops = run.mops();

  auto row = bench::base_row(table->config(), pool.size(), "ycsb");
  row.op = "mixed";
  row.load_factor = table->load_factor();
  row.ops = run.ops;
  row.seconds = run.seconds;
  row.mops = run.mops();
  row.extra = {std::string(1, static_cast<char>(spec.workload))};
  res.rows.push_back(std::move(row));
  return res;
}

}  // namespace warpbench::apps

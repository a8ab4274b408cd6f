#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warpbench/bench/load.hpp"

namespace warpbench::bench {

struct AgingSpec {
  TableConfig table;
  std::uint64_t seed = 1;
  std::size_t iterations = 1000;
  double fill = 0.85;
  double slice = 0.01;
  bool probe_pass = false;
  bool throughput_pass = true;
};

struct AgingIteration {
  double load_factor = 0.0;
  double mops = 0.0;
  std::array<std::optional<double>, instrument::kOpKinds> probes{};
  std::uint64_t failures = 0;

  [[nodiscard]] std::optional<double> probe_mean(OpKind k) const { return probes[static_cast<std::size_t>(k)]; }
};

struct AgingResult {
  std::vector<AgingIteration> iterations;
  std::vector<instrument::CsvRow> rows;
  std::uint64_t fill_errors = 0;
  std::uint64_t failures = 0;  // summed over iterations
};

namespace detail {

/// Op mix of one aging iteration over stream positions: inserts take
/// [tail, tail+s), erases [head, head+s), positive queries sample keys
/// that stay live for the whole iteration.
inline std::vector<Op> aging_ops(const KeyStream& ks, std::uint64_t head, std::uint64_t tail, std::uint64_t s,
                                 std::uint64_t iteration, std::uint64_t seed) {
  std::vector<Op> ops;
  ops.reserve(4 * s);
  for (std::uint64_t i = 0; i < s; ++i) ops.push_back({OpKind::insert, ks.at(tail + i)});
  for (std::uint64_t i = 0; i < s; ++i) ops.push_back({OpKind::erase, ks.at(head + i)});
  const std::uint64_t stable_lo = head + s, stable_n = tail - stable_lo;
  for (std::uint64_t i = 0; i < s; ++i) ops.push_back({OpKind::query_pos, ks.at(stable_lo + i * stable_n / s)});
  for (std::uint64_t i = 0; i < s; ++i) ops.push_back({OpKind::query_neg, ks.at(kAbsentOffset + iteration * s + i)});
  SplitMix rng(seed * 0x9e3779b97f4a7c15ULL + iteration);
  std::shuffle(ops.begin(), ops.end(), rng);
  return ops;
}

struct AgingRun {
  std::vector<PassResult> iters;
  std::vector<double> loads;
  PassResult fill;
};

inline AgingRun aging_run(const AgingSpec& spec, ThreadPool& pool, bool probes) {
  auto table = make_table(spec.table, probes ? tables::HookKind::probes : tables::HookKind::none);
  const std::uint64_t cap = table->capacity_slots();
  const auto n0 = static_cast<std::uint64_t>(std::llround(spec.fill * static_cast<double>(cap)));
  const auto s = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(spec.slice * static_cast<double>(cap))));
  const KeyStream ks(spec.seed);
  AgingRun run;
  {
    std::vector<Key> keys(n0);
    for (std::uint64_t i = 0; i < n0; ++i) keys[i] = ks.at(i);
    run.fill = run_pass(pool, *table, keys, OpKind::insert, probes);
  }
  std::uint64_t head = 0, tail = n0;
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    const auto ops = aging_ops(ks, head, tail, s, it, spec.seed);
    run.iters.push_back(run_mixed(pool, *table, ops, probes));
    head += s;
    tail += s;
    run.loads.push_back(table->load_factor());
  }
  return run;
}

}  // namespace detail

/// Aging: fill to 85%, then each iteration runs one mixed concurrent phase
/// inserting 1% new keys, erasing the oldest 1%, and querying 1% live and
/// 1% absent keys.
inline AgingResult run_aging(const AgingSpec& spec, ThreadPool& pool) {
  AgingResult res;
  std::optional<detail::AgingRun> timed, counted;
  if (spec.throughput_pass) timed = detail::aging_run(spec, pool, false);
  if (spec.probe_pass) counted = detail::aging_run(spec, pool, true);
  const detail::AgingRun& main = timed ? *timed : *counted;

  const TableConfig proto = validate_config(spec.table);
  res.fill_errors = main.fill.total_failures();
  {
    auto r = pass_row(proto, pool.size(), "aging:fill", OpKind::insert, spec.fill, main.fill);
    if (counted) r.probes_mean = counted->fill.probe_mean(OpKind::insert);
    if (!timed) r.seconds = r.mops = std::nan("");
    res.rows.push_back(std::move(r));
  }
  constexpr OpKind kinds[] = {OpKind::insert, OpKind::erase, OpKind::query_pos, OpKind::query_neg};
  for (std::size_t it = 0; it < main.iters.size(); ++it) {
    const PassResult& p = main.iters[it];
    AgingIteration ai;
    ai.load_factor = main.loads[it];
    ai.mops = timed ? p.mops() : std::nan("");
    ai.failures = p.total_failures();
    if (counted)
      for (OpKind k : kinds) ai.probes[static_cast<std::size_t>(k)] = counted->iters[it].probe_mean(k);
    res.failures += ai.failures;

    const std::string phase = "aging:" + std::to_string(it + 1);
    auto mixed = base_row(proto, pool.size(), phase);
    mixed.op = "mixed";
    mixed.load_factor = ai.load_factor;
    mixed.ops = p.ops;
    mixed.seconds = timed ? p.seconds : std::nan("");
    mixed.mops = ai.mops;
    res.rows.push_back(mixed);
    for (OpKind k : kinds) {
      auto r = base_row(proto, pool.size(), phase);
      r.op = std::string(instrument::to_string(k));
      r.load_factor = ai.load_factor;
      r.ops = p.kind_ops[static_cast<std::size_t>(k)];
      r.seconds = mixed.seconds;
      r.mops = timed && p.seconds > 0 ? static_cast<double>(r.ops) / p.seconds / 1e6 : std::nan("");
      r.probes_mean = ai.probes[static_cast<std::size_t>(k)];
      res.rows.push_back(std::move(r));
    }
    res.iterations.push_back(ai);
  }
  return res;
}

}  // namespace warpbench::bench

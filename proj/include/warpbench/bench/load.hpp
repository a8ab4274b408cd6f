#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/workload.hpp"
#include "warpbench/instrument/csv.hpp"

namespace warpbench::bench {

// Positions at or above this in a key stream are never inserted by any runner.
inline constexpr std::uint64_t kAbsentOffset = std::uint64_t{1} << 62;

struct LoadSpec {
  TableConfig table;
  std::uint64_t seed = 1;
  bool probe_pass = false;
  bool throughput_pass = true;
  std::size_t points = 18;  // load points at 5% steps: 0.05 .. 0.90
  double step = 0.05;
};

struct LoadResult {
  std::vector<instrument::CsvRow> rows;
  std::uint64_t full_errors = 0;     // inserts that reported full
  std::uint64_t lookup_errors = 0;   // positive misses, negative hits, failed erases
  double final_load = 0.0;           // load factor at the top of the sweep
};

/// Row labels for a validated config.
[[nodiscard]] inline instrument::CsvRow base_row(const TableConfig& cfg, unsigned threads, std::string phase) {
  instrument::CsvRow r;
  r.design = std::string(to_string(cfg.design));
  r.mode = std::string(to_string(cfg.mode));
  r.capacity = cfg.capacity_slots;
  r.line_bytes = cfg.line_bytes;
  r.phase = std::move(phase);
  r.threads = threads;
  return r;
}

[[nodiscard]] inline instrument::CsvRow pass_row(const TableConfig& cfg, unsigned threads, std::string phase,
                                                 OpKind op, double load, const PassResult& p) {
  auto r = base_row(cfg, threads, std::move(phase));
  r.op = std::string(instrument::to_string(op));
  r.load_factor = load;
  r.ops = p.ops;
  r.seconds = p.seconds;
  r.mops = p.mops();
  r.probes_mean = p.probe_mean(op);
  return r;
}

namespace detail {

/// Evenly spaced sample of `count` keys from keys[0, n).
inline std::vector<Key> sample_prefix(const std::vector<Key>& keys, std::size_t n, std::size_t count) {
  std::vector<Key> out;
  if (n == 0) return out;
  count = std::min(count, n);
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) out.push_back(keys[j * n / count]);
  return out;
}

struct SweepOutput {
  std::vector<instrument::CsvRow> rows;
  std::uint64_t full_errors = 0;
  std::uint64_t lookup_errors = 0;
  double final_load = 0.0;
};

inline SweepOutput load_sweep(const LoadSpec& spec, ThreadPool& pool, tables::HookKind hooks) {
  auto table = make_table(spec.table, hooks);
  const bool probes = hooks == tables::HookKind::probes;
  const std::size_t cap = table->capacity_slots();
  const auto slice = static_cast<std::size_t>(std::llround(spec.step * static_cast<double>(cap)));
  const std::size_t total = slice * spec.points;
  const auto keys = gen_uniform_keys(spec.seed, total);
  const auto absent = gen_uniform_keys(spec.seed, slice, kAbsentOffset);

  SweepOutput out;
  std::size_t filled = 0;
  for (std::size_t p = 1; p <= spec.points; ++p) {
    const double load = spec.step * static_cast<double>(p);
    const std::span<const Key> ins(keys.data() + filled, slice);
    const auto pi = run_pass(pool, *table, ins, OpKind::insert, probes);
    filled += slice;
    out.full_errors += pi.failed(OpKind::insert);
    out.rows.push_back(pass_row(table->config(), pool.size(), "load", OpKind::insert, load, pi));

    const auto pos = sample_prefix(keys, filled, slice);
    const auto pq = run_pass(pool, *table, pos, OpKind::query_pos, probes);
    out.rows.push_back(pass_row(table->config(), pool.size(), "load", OpKind::query_pos, load, pq));
    const auto pn = run_pass(pool, *table, absent, OpKind::query_neg, probes);
    out.rows.push_back(pass_row(table->config(), pool.size(), "load", OpKind::query_neg, load, pn));
    out.lookup_errors += pq.total_failures() + pn.total_failures();
  }
  out.final_load = table->load_factor();

  // Delete sweep: remove one slice at a time, oldest first, down to empty.
  std::size_t erased = 0;
  for (std::size_t p = spec.points; p-- > 0;) {
    const std::span<const Key> del(keys.data() + erased, slice);
    const auto pe = run_pass(pool, *table, del, OpKind::erase, probes);
    erased += slice;
    out.lookup_errors += pe.total_failures();
    out.rows.push_back(pass_row(table->config(), pool.size(), "load", OpKind::erase, spec.step * static_cast<double>(p), pe));
  }
  return out;
}

}  // namespace detail

/// Load sweep: insert 5% slices up to 90%, timing an insert, positive query
/// and negative query pass at every point; then erase 5% slices back down to
/// empty. With probe_pass the sweep is repeated on an instrumented table and
/// its probe means are joined onto the timed rows.
inline LoadResult run_load(const LoadSpec& spec, ThreadPool& pool) {
  LoadResult res;
  detail::SweepOutput timed;
  if (spec.throughput_pass) timed = detail::load_sweep(spec, pool, tables::HookKind::none);
  if (spec.probe_pass) {
    auto counted = detail::load_sweep(spec, pool, tables::HookKind::probes);
    if (!spec.throughput_pass) {
      for (auto& r : counted.rows) r.seconds = r.mops = std::nan("");
      timed = std::move(counted);
    } else {
      for (std::size_t i = 0; i < timed.rows.size(); ++i) timed.rows[i].probes_mean = counted.rows[i].probes_mean;
    }
  }
  res.rows = std::move(timed.rows);
  res.full_errors = timed.full_errors;
  res.lookup_errors = timed.lookup_errors;
  res.final_load = timed.final_load;
  return res;
}

struct ScalingSpec {
  TableConfig table;
  std::vector<std::size_t> sizes{100'000, 1'000'000, 10'000'000};
  std::uint64_t seed = 1;
  double load = 0.90;
  std::size_t query_sample = 1'000'000;
  bool throughput_pass = true;
};

struct ScalingPoint {
  std::size_t capacity = 0;
  double insert_probes = 0.0;
  double query_pos_probes = 0.0;
  double query_neg_probes = 0.0;
  double insert_mops = 0.0;
  double query_mops = 0.0;
  std::uint64_t full_errors = 0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  std::vector<instrument::CsvRow> rows;

  /// Largest relative deviation of a probe mean from its value at the
  /// smallest size, over all op kinds.
  [[nodiscard]] double max_probe_drift() const {
    double worst = 0.0;
    if (points.empty()) return worst;
    const auto& ref = points.front();
    auto rel = [](double a, double b) { return b != 0 ? std::abs(a - b) / b : std::abs(a); };
    for (const auto& p : points) {
      worst = std::max(worst, rel(p.insert_probes, ref.insert_probes));
      worst = std::max(worst, rel(p.query_pos_probes, ref.query_pos_probes));
      worst = std::max(worst, rel(p.query_neg_probes, ref.query_neg_probes));
    }
    return worst;
  }
};

/// Fills tables of growing size to the target load; records insert and
/// query throughput plus probe means at each size.
inline ScalingResult run_scaling(const ScalingSpec& spec, ThreadPool& pool) {
  ScalingResult res;
  for (std::size_t size : spec.sizes) {
    TableConfig cfg = spec.table;
    cfg.capacity_slots = size;
    ScalingPoint pt;
    std::vector<instrument::CsvRow> rows;
    for (int pass = spec.throughput_pass ? 0 : 1; pass < 2; ++pass) {
      const bool probes = pass == 1;
      auto table = make_table(cfg, probes ? tables::HookKind::probes : tables::HookKind::none);
      pt.capacity = table->capacity_slots();
      const auto n = static_cast<std::size_t>(spec.load * static_cast<double>(pt.capacity));
      const auto keys = gen_uniform_keys(spec.seed, n);
      const auto pos = detail::sample_prefix(keys, n, spec.query_sample);
      const auto neg = gen_uniform_keys(spec.seed, pos.size(), kAbsentOffset);
      const auto pi = run_pass(pool, *table, keys, OpKind::insert, probes);
      const auto pq = run_pass(pool, *table, pos, OpKind::query_pos, probes);
      const auto pn = run_pass(pool, *table, neg, OpKind::query_neg, probes);
      const double lf = table->load_factor();
      if (!probes || !spec.throughput_pass) {
        pt.full_errors = pi.failed(OpKind::insert);
        pt.insert_mops = pi.mops();
        pt.query_mops = pq.mops();
        rows = {pass_row(table->config(), pool.size(), "scaling", OpKind::insert, lf, pi),
                pass_row(table->config(), pool.size(), "scaling", OpKind::query_pos, lf, pq),
                pass_row(table->config(), pool.size(), "scaling", OpKind::query_neg, lf, pn)};
      }
      if (probes) {
        pt.insert_probes = pi.probes->mean(OpKind::insert);
        pt.query_pos_probes = pq.probes->mean(OpKind::query_pos);
        pt.query_neg_probes = pn.probes->mean(OpKind::query_neg);
        rows[0].probes_mean = pt.insert_probes;
        rows[1].probes_mean = pt.query_pos_probes;
        rows[2].probes_mean = pt.query_neg_probes;
        if (!spec.throughput_pass)
          for (auto& r : rows) r.seconds = r.mops = std::nan("");
      }
    }
    res.points.push_back(pt);
    for (auto& r : rows) res.rows.push_back(std::move(r));
  }
  return res;
}

struct OverheadSpec {
  TableConfig table;
  std::uint64_t seed = 1;
  double load = 0.90;
  std::size_t slices = 18;
};

struct OverheadResult {
  std::vector<instrument::CsvRow> rows;
  // Per op kind (insert, query_pos, query_neg): (phased - concurrent) / phased, in percent.
  std::map<std::string, double> overhead_pct;
  std::uint64_t phased_lock_probes = 0;
  std::uint64_t concurrent_lock_probes = 0;
  bool contents_equal = false;
  std::uint64_t errors = 0;
};

namespace detail {

inline std::vector<std::pair<Key, Value>> sorted_contents(const Table& t) {
  std::vector<std::pair<Key, Value>> out;
  t.for_each([&](Key k, Value v, const Slot*) { out.emplace_back(k, v); });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Runs one phase-structured workload (disjoint insert slices, then
/// read-only query phases) in concurrent and in phased mode.
inline OverheadResult run_overhead(const OverheadSpec& spec, ThreadPool& pool) {
  OverheadResult res;
  std::map<std::string, std::pair<double, double>> mops;  // op -> (concurrent, phased)
  std::vector<std::pair<Key, Value>> contents[2];
  for (int m = 0; m < 2; ++m) {
    TableConfig cfg = spec.table;
    cfg.mode = m == 0 ? Mode::concurrent : Mode::phased;
    for (int pass = 0; pass < 2; ++pass) {
      const bool probes = pass == 1;
      auto table = make_table(cfg, probes ? tables::HookKind::probes : tables::HookKind::none);
      const auto n = static_cast<std::size_t>(spec.load * static_cast<double>(table->capacity_slots()));
      const auto keys = gen_uniform_keys(spec.seed, n);
      const auto neg = gen_uniform_keys(spec.seed, n / spec.slices + 1, kAbsentOffset);
      PassResult ins, qp, qn;
      for (std::size_t s = 0; s < spec.slices; ++s) {
        const std::size_t b = n * s / spec.slices, e = n * (s + 1) / spec.slices;
        auto r = run_pass(pool, *table, std::span<const Key>(keys.data() + b, e - b), OpKind::insert, probes);
        ins.seconds += r.seconds;
        ins.ops += r.ops;
        res.errors += r.total_failures();
        if (probes) {
          if (!ins.probes) ins.probes = *r.probes;
          else *ins.probes += *r.probes;
        }
      }
      const auto pos = detail::sample_prefix(keys, n, n / spec.slices + 1);
      qp = run_pass(pool, *table, pos, OpKind::query_pos, probes);
      qn = run_pass(pool, *table, neg, OpKind::query_neg, probes);
      res.errors += qp.total_failures() + qn.total_failures();
      const double lf = table->load_factor();
      if (probes) {
        const std::uint64_t locks =
            ins.probes->total_lock_probes() + qp.probes->total_lock_probes() + qn.probes->total_lock_probes();
        (m == 0 ? res.concurrent_lock_probes : res.phased_lock_probes) = locks;
        res.rows[res.rows.size() - 3].probes_mean = ins.probes->mean(OpKind::insert);
        res.rows[res.rows.size() - 2].probes_mean = qp.probes->mean(OpKind::query_pos);
        res.rows[res.rows.size() - 1].probes_mean = qn.probes->mean(OpKind::query_neg);
      } else {
        contents[m] = detail::sorted_contents(*table);
        res.rows.push_back(pass_row(table->config(), pool.size(), "overhead", OpKind::insert, lf, ins));
        res.rows.push_back(pass_row(table->config(), pool.size(), "overhead", OpKind::query_pos, lf, qp));
        res.rows.push_back(pass_row(table->config(), pool.size(), "overhead", OpKind::query_neg, lf, qn));
        auto put = [&](const char* op, double v) { (m == 0 ? mops[op].first : mops[op].second) = v; };
        put("insert", ins.mops());
        put("query_pos", qp.mops());
        put("query_neg", qn.mops());
      }
    }
  }
  res.contents_equal = contents[0] == contents[1];
  for (const auto& [op, v] : mops) res.overhead_pct[op] = v.second > 0 ? 100.0 * (v.second - v.first) / v.second : 0.0;
  return res;
}

}  // namespace warpbench::bench

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "warpbench/bench/pool.hpp"
#include "warpbench/instrument/probe.hpp"
#include "warpbench/instrument/throughput.hpp"
#include "warpbench/tables/any_table.hpp"

namespace warpbench::bench {

using instrument::OpKind;

/// Value stored for a benchmark key; lets queries be checked without a map.
[[nodiscard]] constexpr Value value_for(Key k) noexcept { return fmix64(k) | 1; }

struct Op {
  OpKind kind;
  Key key;
};

struct PassResult {
  double seconds = 0.0;
  std::uint64_t ops = 0;
  std::array<std::uint64_t, instrument::kOpKinds> kind_ops{};
  std::array<std::uint64_t, instrument::kOpKinds> failures{};  // full / unexpected miss / unexpected hit
  std::optional<instrument::ProbeStats> probes;

  [[nodiscard]] double mops() const noexcept {
    return seconds > 0 ? static_cast<double>(ops) / seconds / 1e6 : 0.0;
  }
  [[nodiscard]] std::uint64_t failed(OpKind k) const noexcept { return failures[static_cast<std::size_t>(k)]; }
  [[nodiscard]] std::uint64_t total_failures() const noexcept {
    std::uint64_t n = 0;
    for (auto f : failures) n += f;
    return n;
  }
  [[nodiscard]] std::optional<double> probe_mean(OpKind k) const {
    if (!probes) return std::nullopt;
    return probes->mean(k);
  }
};

/// Applies one op; returns true when the outcome is the expected one.
/// Inserts expect a fresh key, query_pos a present key, query_neg an absent
/// key, erase a present key. `query` and `update` accept either outcome.
inline bool apply(Table& t, const Op& op) {
  switch (op.kind) {
    case OpKind::insert: return t.upsert(op.key, value_for(op.key), merge::keep_existing) != UpsertStatus::full;
    case OpKind::update: return t.upsert(op.key, value_for(op.key), merge::replace) != UpsertStatus::full;
    case OpKind::query: {
      const auto v = t.query(op.key);
      return !v || *v == value_for(op.key);
    }
    case OpKind::query_pos: {
      const auto v = t.query(op.key);
      return v && *v == value_for(op.key);
    }
    case OpKind::query_neg: return !t.query(op.key);
    case OpKind::erase: return t.erase(op.key);
  }
  return false;
}

namespace detail {

template <class OpAt>
PassResult run_ops(ThreadPool& pool, Table& t, std::size_t n, OpAt op_at, bool count_probes) {
  const unsigned T = pool.size();
  std::vector<std::unique_ptr<instrument::ProbeContext>> ctx;
  if (count_probes)
    for (unsigned i = 0; i < T; ++i)
      ctx.push_back(std::make_unique<instrument::ProbeContext>(t.config().line_bytes));
  std::vector<PassResult> local(T);

  instrument::Stopwatch sw;
  pool.run([&](unsigned tid) {
    auto [b, e] = share(n, tid, T);
    PassResult& r = local[tid];
    if (count_probes) {
      instrument::ScopedContext scope(*ctx[tid]);
      for (std::size_t i = b; i < e; ++i) {
        const Op op = op_at(i);
        if (!apply(t, op)) ++r.failures[static_cast<std::size_t>(op.kind)];
        ++r.kind_ops[static_cast<std::size_t>(op.kind)];
        ctx[tid]->finish_op(op.kind);
      }
    } else {
      for (std::size_t i = b; i < e; ++i) {
        const Op op = op_at(i);
        if (!apply(t, op)) ++r.failures[static_cast<std::size_t>(op.kind)];
        ++r.kind_ops[static_cast<std::size_t>(op.kind)];
      }
    }
  });
  PassResult out;
  out.seconds = sw.seconds();
  out.ops = n;
  for (const auto& r : local)
    for (std::size_t k = 0; k < instrument::kOpKinds; ++k) {
      out.failures[k] += r.failures[k];
      out.kind_ops[k] += r.kind_ops[k];
    }
  if (count_probes) {
    std::vector<instrument::ProbeStats> parts;
    for (const auto& c : ctx) parts.push_back(c->stats());
    out.probes = instrument::merge(parts, t.config().line_bytes);
  }
  return out;
}

}  // namespace detail

/// One timed phase applying `kind` to every key, split evenly across the pool.
inline PassResult run_pass(ThreadPool& pool, Table& t, std::span<const Key> keys, OpKind kind,
                           bool count_probes = false) {
  return detail::run_ops(
      pool, t, keys.size(), [&](std::size_t i) { return Op{kind, keys[i]}; }, count_probes);
}

/// One timed phase over a prepared mix of operations.
inline PassResult run_mixed(ThreadPool& pool, Table& t, std::span<const Op> ops, bool count_probes = false) {
  return detail::run_ops(
      pool, t, ops.size(), [&](std::size_t i) { return ops[i]; }, count_probes);
}

}  // namespace warpbench::bench

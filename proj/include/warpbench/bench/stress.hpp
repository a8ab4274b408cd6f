#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/workload.hpp"

namespace warpbench::bench {

struct StressSpec {
  TableConfig table;
  unsigned threads = 8;
  std::uint64_t ops = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t shared_keys = 4096;   // contended by every thread
  std::size_t private_keys = 8192;  // per thread, checked against an oracle
};

struct StressResult {
  std::uint64_t duplicate_keys = 0;
  std::uint64_t private_mismatches = 0;  // private keys whose final state differs from the thread's oracle
  std::uint64_t shared_bad_values = 0;   // shared keys holding a value nobody wrote
  std::uint64_t full_errors = 0;
  std::uint64_t ops = 0;
};

/// Mixed upsert/erase/query from many threads. Half the operations hit a
/// key range shared by all threads; the rest hit a per-thread partition
/// whose single-writer history gives an exact expected final state.
inline StressResult run_stress(const StressSpec& spec) {
  auto table = make_table(spec.table);
  const KeyStream ks(spec.seed);
  const std::uint64_t priv_base = spec.shared_keys;
  auto shared_key = [&](std::uint64_t i) { return ks.at(i); };
  auto private_key = [&](unsigned t, std::uint64_t i) { return ks.at(priv_base + t * spec.private_keys + i); };

  std::vector<std::unordered_map<Key, Value>> oracle(spec.threads);
  std::vector<std::uint64_t> full(spec.threads, 0);
  {
    ThreadPool pool(spec.threads);
    pool.run([&](unsigned t) {
      SplitMix rng(spec.seed ^ (0x94d049bb133111ebULL * (t + 1)));
      auto& mine = oracle[t];
      const auto [b, e] = share(spec.ops, t, spec.threads);
      for (std::uint64_t i = b; i < e; ++i) {
        const std::uint64_t r = rng();
        const bool shared = r & 1;
        const unsigned kind = static_cast<unsigned>((r >> 1) % 10);
        const Key k = shared ? shared_key(reduce(r * 0xd6e8feb86659fd93ULL, spec.shared_keys))
                             : private_key(t, reduce(rng(), spec.private_keys));
        if (kind < 4) {
          const Value inc = shared ? value_for(k) : (r >> 40) + 1;
          const auto st = table->upsert(k, inc, shared ? merge::replace : merge::add);
          if (st == UpsertStatus::full) {
            ++full[t];
          } else if (!shared) {
            mine[k] += inc;
          }
        } else if (kind < 7) {
          table->erase(k);
          if (!shared) mine.erase(k);
        } else {
          (void)table->query(k);
        }
      }
    });
  }

  StressResult res;
  res.ops = spec.ops;
  for (auto f : full) res.full_errors += f;
  res.duplicate_keys = table->duplicate_scan().size();
  for (unsigned t = 0; t < spec.threads; ++t)
    for (std::uint64_t i = 0; i < spec.private_keys; ++i) {
      const Key k = private_key(t, i);
      const auto got = table->query(k);
      const auto it = oracle[t].find(k);
      const bool want = it != oracle[t].end();
      if (got.has_value() != want || (want && *got != it->second)) ++res.private_mismatches;
    }
  for (std::uint64_t i = 0; i < spec.shared_keys; ++i) {
    const Key k = shared_key(i);
    if (const auto v = table->query(k); v && *v != value_for(k)) ++res.shared_bad_values;
  }
  return res;
}

}  // namespace warpbench::bench

#pragma once

#include <barrier>
#include <cstdint>
#include <thread>
#include <vector>

#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/workload.hpp"

namespace warpbench::bench {

struct AdversarialSpec {
  Design design = Design::p2;
  std::size_t buckets = 10'000;  // primary buckets, one replay each per trial
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  bool concurrent = true;          // false replays the same script on one thread
  std::size_t batch = 32;          // buckets between actor barriers
  unsigned yield_per_mille = 500;  // delay injector: chance to yield at each scheduling point
};

struct AdversarialResult {
  std::size_t primary_buckets = 0;
  std::uint64_t replays = 0;
  std::uint64_t duplicate_keys = 0;  // keys found in more than one slot, summed over trials
  std::uint64_t trials_with_duplicates = 0;
  std::uint64_t full_errors = 0;
};

/// Draws keys until every primary bucket owns two: X (pre-inserted blocker)
/// and Y (the key raced by two inserters while X is erased).
inline std::pair<std::vector<Key>, std::vector<Key>> adversarial_pairs(const Table& t, std::uint64_t seed) {
  const std::size_t nb = t.num_primary_buckets();
  std::vector<Key> x(nb, kEmptyKey), y(nb, kEmptyKey);
  std::size_t missing = 2 * nb;
  const KeyStream ks(seed);
  for (std::uint64_t i = 0; missing > 0; ++i) {
    const Key k = ks.at(i);
    const std::size_t b = t.primary_bucket(k);
    if (x[b] == kEmptyKey) {
      x[b] = k;
      --missing;
    } else if (y[b] == kEmptyKey) {
      y[b] = k;
      --missing;
    }
  }
  return {std::move(x), std::move(y)};
}

/// Race reproduction: in every primary bucket, one actor erases X while two
/// actors upsert Y, with randomized stalls between each table's probe and
/// write steps. A correct table ends every trial without duplicate keys.
inline AdversarialResult run_adversarial(const AdversarialSpec& spec) {
  AdversarialResult res;
  TableConfig cfg;
  cfg.design = spec.design;
  cfg = validate_config(cfg);
  std::size_t total = spec.buckets;
  if (cfg.design == Design::iceberg || cfg.design == Design::iceberg_md)
    while (tables::iceberg_front_buckets(total, cfg.iceberg_front_fraction) < spec.buckets) ++total;
  cfg.capacity_slots = total * cfg.bucket_size;

  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    auto table = make_table(cfg, tables::HookKind::race);
    const std::uint64_t trial_seed = spec.seed * 0x9e3779b97f4a7c15ULL + trial;
    const auto [xs, ys] = adversarial_pairs(*table, trial_seed);
    const std::size_t nb = xs.size();
    res.primary_buckets = nb;
    for (Key x : xs)
      if (table->upsert(x, value_for(x), merge::keep_existing) == UpsertStatus::full) ++res.full_errors;

    auto act = [&](unsigned role, std::size_t b) {
      if (role == 0) {
        table->erase(xs[b]);
      } else if (table->upsert(ys[b], value_for(ys[b]), merge::keep_existing) == UpsertStatus::full) {
        std::atomic_ref<std::uint64_t>(res.full_errors).fetch_add(1, std::memory_order_relaxed);
      }
    };

    if (!spec.concurrent) {
      for (std::size_t b = 0; b < nb; ++b)
        for (unsigned role = 0; role < 3; ++role) act(role, b);
    } else {
      std::barrier sync(3);
      std::vector<std::thread> actors;
      for (unsigned role = 0; role < 3; ++role)
        actors.emplace_back([&, role] {
          tables::DelayInjector inj(trial_seed ^ (0xa0761d6478bd642fULL * (role + 1)), spec.yield_per_mille);
          tables::ScopedInjector scope(inj);
          for (std::size_t lo = 0; lo < nb; lo += spec.batch) {
            const std::size_t hi = std::min(nb, lo + spec.batch);
            for (std::size_t b = lo; b < hi; ++b) act(role, b);
            sync.arrive_and_wait();
          }
        });
      for (auto& a : actors) a.join();
    }
    res.replays += nb;
    const auto dups = table->duplicate_scan();
    res.duplicate_keys += dups.size();
    if (!dups.empty()) ++res.trials_with_duplicates;
  }
  return res;
}

}  // namespace warpbench::bench

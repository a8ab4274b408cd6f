#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <unordered_set>

#include "warpbench/bench/adversarial.hpp"
#include "warpbench/bench/aging.hpp"
#include "warpbench/bench/load.hpp"
#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/pool.hpp"
#include "warpbench/bench/stress.hpp"
#include "warpbench/bench/workload.hpp"

using namespace warpbench;
using namespace warpbench::bench;

namespace {

// Upper 0.1% point of chi-square with 15 df, from scipy.stats.chi2.ppf.
constexpr double kChi2Crit15 = 37.6973;
// 1 / sum_{i<=1000} i^-0.99, computed offline with math.fsum.
constexpr double kZipfRank1 = 0.129384;

TableConfig small(Design d, std::size_t slots = 1 << 14) {
  TableConfig c;
  c.design = d;
  c.capacity_slots = slots;
  return c;
}

std::size_t count_rows(const std::vector<instrument::CsvRow>& rows, std::string_view op) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.op == op;
  return n;
}

}  // namespace

TEST(KeyStream, SameSeedSameKeys) {
  EXPECT_EQ(gen_uniform_keys(3, 1000), gen_uniform_keys(3, 1000));
  EXPECT_NE(gen_uniform_keys(3, 1000), gen_uniform_keys(4, 1000));
  const auto tail = gen_uniform_keys(3, 10, 990);
  const auto all = gen_uniform_keys(3, 1000);
  EXPECT_TRUE(std::equal(tail.begin(), tail.end(), all.begin() + 990));
}

TEST(KeyStream, NoSentinelsNoRepeats) {
  const auto keys = gen_uniform_keys(11, 1'000'000);
  std::unordered_set<Key> seen(keys.begin(), keys.end());
  EXPECT_EQ(seen.size(), keys.size());
  for (Key k : keys) ASSERT_FALSE(is_sentinel(k));
}

TEST(KeyStream, AbsentOffsetDisjoint) {
  const auto present = gen_uniform_keys(5, 100000);
  const auto absent = gen_uniform_keys(5, 100000, kAbsentOffset);
  std::unordered_set<Key> seen(present.begin(), present.end());
  for (Key k : absent) ASSERT_FALSE(seen.count(k));
}

TEST(SplitMix, BelowStaysInRange) {
  SplitMix r(1);
  for (int i = 0; i < 10000; ++i) {
    ASSERT_LT(r.below(7), 7u);
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Zipf, RejectsBadParameters) {
  EXPECT_THROW(ZipfState(0, 0.5), std::invalid_argument);
  EXPECT_THROW(ZipfState(10, -0.1), std::invalid_argument);
  EXPECT_THROW(ZipfState(10, std::nan("")), std::invalid_argument);
}

TEST(Zipf, ThetaZeroIsUniform) {
  ZipfState z(16, 0.0);
  SplitMix rng(9);
  std::vector<std::size_t> counts(16, 0);
  constexpr int kDraws = 160000;
  for (int i = 0; i < kDraws; ++i) {
    const auto k = z.next(rng);
    ASSERT_GE(k, 1u);
    ASSERT_LE(k, 16u);
    ++counts[k - 1];
  }
  double chi = 0;
  for (auto c : counts) chi += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi, kChi2Crit15);
}

TEST(Zipf, SameSeedSameSequence) {
  ZipfState z(1000, 0.99);
  SplitMix a(4), b(4);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(z.next(a), z.next(b));
}

TEST(Zipf, AnalyticProbability) {
  ZipfState z(1000, 0.99);
  EXPECT_NEAR(z.probability(1), kZipfRank1, 1e-6);
  double total = 0;
  for (std::uint64_t k = 1; k <= 1000; ++k) total += z.probability(k);
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Zipf, EmpiricalTopRanksMatch) {
  ZipfState z(1000, 0.99);
  SplitMix rng(2024);
  std::vector<std::size_t> counts(11, 0);
  constexpr int kDraws = 1'000'000;
  for (int i = 0; i < kDraws; ++i) {
    const auto k = z.next(rng);
    ASSERT_LE(k, 1000u);
    if (k <= 10) ++counts[k];
  }
  for (std::uint64_t k = 1; k <= 10; ++k) {
    const double p = static_cast<double>(counts[k]) / kDraws;
    EXPECT_NEAR(p / z.probability(k), 1.0, 0.05) << "rank " << k;
  }
}

TEST(Zipf, ExtremeSkewAndNearOne) {
  SplitMix rng(3);
  ZipfState one(1, 2.0);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(one.next(rng), 1u);
  ZipfState near(1000, 1.0);
  for (int i = 0; i < 10000; ++i) ASSERT_LE(near.next(rng), 1000u);
}

TEST(Pool, EveryWorkerRunsOnce) {
  ThreadPool pool(4);
  EXPECT_EQ(pool.size(), 4u);
  std::vector<std::atomic<int>> hits(4);
  for (int round = 0; round < 50; ++round) pool.run([&](unsigned tid) { hits[tid].fetch_add(1); });
  for (auto& h : hits) EXPECT_EQ(h.load(), 50);
}

TEST(Pool, ZeroMeansOne) {
  ThreadPool pool(0);
  EXPECT_EQ(pool.size(), 1u);
}

TEST(Pool, WorkerExceptionRethrown) {
  ThreadPool pool(3);
  EXPECT_THROW(pool.run([](unsigned tid) {
    if (tid == 2) throw std::runtime_error("boom");
  }),
               std::runtime_error);
  std::atomic<int> n{0};
  pool.run([&](unsigned) { n.fetch_add(1); });
  EXPECT_EQ(n.load(), 3);
}

TEST(Passes, ApplyReportsOutcomes) {
  auto t = make_table(small(Design::p2));
  const Key k = 12345;
  EXPECT_FALSE(apply(*t, {OpKind::query_pos, k}));
  EXPECT_TRUE(apply(*t, {OpKind::query_neg, k}));
  EXPECT_TRUE(apply(*t, {OpKind::insert, k}));
  EXPECT_EQ(t->query(k), value_for(k));
  EXPECT_TRUE(apply(*t, {OpKind::query_pos, k}));
  EXPECT_FALSE(apply(*t, {OpKind::query_neg, k}));
  EXPECT_TRUE(apply(*t, {OpKind::erase, k}));
  EXPECT_FALSE(apply(*t, {OpKind::erase, k}));
}

TEST(Passes, RunPassCountsEveryOp) {
  ThreadPool pool(3);
  auto t = make_table(small(Design::double_hashing), tables::HookKind::probes);
  const auto keys = gen_uniform_keys(1, 5000);
  const auto pi = run_pass(pool, *t, keys, OpKind::insert, true);
  EXPECT_EQ(pi.ops, 5000u);
  EXPECT_EQ(pi.kind_ops[static_cast<std::size_t>(OpKind::insert)], 5000u);
  EXPECT_EQ(pi.total_failures(), 0u);
  ASSERT_TRUE(pi.probes.has_value());
  EXPECT_EQ((*pi.probes)[OpKind::insert].op_count, 5000u);
  EXPECT_GE(pi.probe_mean(OpKind::insert), 1.0);
  const auto pq = run_pass(pool, *t, keys, OpKind::query_pos);
  EXPECT_EQ(pq.total_failures(), 0u);
  EXPECT_FALSE(pq.probes.has_value());
  const auto pn = run_pass(pool, *t, gen_uniform_keys(1, 5000, kAbsentOffset), OpKind::query_neg);
  EXPECT_EQ(pn.total_failures(), 0u);
}

TEST(Passes, MixedTalliesKinds) {
  ThreadPool pool(2);
  auto t = make_table(small(Design::iceberg));
  std::vector<Op> ops;
  for (Key k = 1; k <= 300; ++k) ops.push_back({OpKind::insert, k * 977});
  for (Key k = 1; k <= 100; ++k) ops.push_back({OpKind::query_neg, k * 977 + 1});
  const auto r = run_mixed(pool, *t, ops);
  EXPECT_EQ(r.ops, 400u);
  EXPECT_EQ(r.kind_ops[static_cast<std::size_t>(OpKind::insert)], 300u);
  EXPECT_EQ(r.kind_ops[static_cast<std::size_t>(OpKind::query_neg)], 100u);
  EXPECT_EQ(r.total_failures(), 0u);
}

TEST(Load, SweepShape) {
  ThreadPool pool(2);
  LoadSpec spec;
  spec.table = small(Design::p2_md);
  spec.probe_pass = true;
  const auto r = run_load(spec, pool);
  EXPECT_EQ(r.full_errors, 0u);
  EXPECT_EQ(r.lookup_errors, 0u);
  EXPECT_NEAR(r.final_load, 0.90, 0.001);
  for (auto op : {"insert", "query_pos", "query_neg", "erase"}) EXPECT_EQ(count_rows(r.rows, op), 18u) << op;
  double last = 0;
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.probes_mean.has_value());
    if (row.op == "insert") {
      EXPECT_GT(row.load_factor, last);
      last = row.load_factor;
    }
  }
}

TEST(Load, ProbeOnlyLeavesTimingBlank) {
  ThreadPool pool(1);
  LoadSpec spec;
  spec.table = small(Design::double_hashing, 1 << 12);
  spec.probe_pass = true;
  spec.throughput_pass = false;
  const auto r = run_load(spec, pool);
  ASSERT_FALSE(r.rows.empty());
  EXPECT_TRUE(std::isnan(r.rows[0].mops));
  EXPECT_GE(r.rows[0].probes_mean.value_or(0), 1.0);
}

TEST(Scaling, ProbesStableAcrossSizes) {
  ThreadPool pool(2);
  ScalingSpec spec;
  spec.table = small(Design::p2_md);
  spec.sizes = {1 << 14, 1 << 16};
  spec.query_sample = 20000;
  const auto r = run_scaling(spec, pool);
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.rows.size(), 6u);
  for (const auto& p : r.points) EXPECT_EQ(p.full_errors, 0u);
  EXPECT_LT(r.max_probe_drift(), 0.05);
}

TEST(Overhead, PhasedSkipsLocks) {
  ThreadPool pool(2);
  for (Design d : {Design::p2, Design::cuckoo, Design::chaining}) {
    OverheadSpec spec;
    spec.table = small(d);
    const auto r = run_overhead(spec, pool);
    EXPECT_TRUE(r.contents_equal) << to_string(d);
    EXPECT_EQ(r.phased_lock_probes, 0u) << to_string(d);
    EXPECT_GT(r.concurrent_lock_probes, 0u) << to_string(d);
    EXPECT_EQ(r.errors, 0u) << to_string(d);
    EXPECT_EQ(r.overhead_pct.size(), 3u);
  }
}

TEST(Aging, RowsPerIteration) {
  ThreadPool pool(2);
  AgingSpec spec;
  spec.table = small(Design::double_md);
  spec.iterations = 20;
  spec.probe_pass = true;
  const auto r = run_aging(spec, pool);
  EXPECT_EQ(r.fill_errors, 0u);
  EXPECT_EQ(r.failures, 0u);
  ASSERT_EQ(r.iterations.size(), 20u);
  EXPECT_EQ(r.rows.size(), 1u + 20u * 5u);
  for (const auto& it : r.iterations) {
    EXPECT_NEAR(it.load_factor, spec.fill, 0.01);
    EXPECT_GE(it.probe_mean(OpKind::query_neg), 1.0);
  }
}

TEST(Adversarial, SafeDesignsNeverDuplicate) {
  for (Design d : kAllDesigns) {
    if (d == Design::unsafe_reference) continue;
    AdversarialSpec spec;
    spec.design = d;
    spec.buckets = 500;
    spec.trials = 3;
    const auto r = run_adversarial(spec);
    EXPECT_EQ(r.duplicate_keys, 0u) << to_string(d);
    EXPECT_EQ(r.full_errors, 0u) << to_string(d);
    EXPECT_EQ(r.replays, 1500u) << to_string(d);
  }
}

TEST(Adversarial, UnsafeReferenceDuplicates) {
  AdversarialSpec spec;
  spec.design = Design::unsafe_reference;
  spec.buckets = 2000;
  spec.trials = 2;
  const auto r = run_adversarial(spec);
  EXPECT_GT(r.duplicate_keys, 0u);
  EXPECT_GT(r.trials_with_duplicates, 0u);
}

TEST(Adversarial, UnsafeIsFineSequentially) {
  AdversarialSpec spec;
  spec.design = Design::unsafe_reference;
  spec.buckets = 2000;
  spec.trials = 2;
  spec.concurrent = false;
  EXPECT_EQ(run_adversarial(spec).duplicate_keys, 0u);
}

TEST(Stress, SmallRunIsClean) {
  for (Design d : {Design::p2_md, Design::cuckoo, Design::chaining}) {
    StressSpec spec;
    spec.table = small(d, 1 << 16);
    spec.threads = 4;
    spec.ops = 100000;
    const auto r = run_stress(spec);
    EXPECT_EQ(r.ops, 100000u) << to_string(d);
    EXPECT_EQ(r.duplicate_keys, 0u) << to_string(d);
    EXPECT_EQ(r.private_mismatches, 0u) << to_string(d);
    EXPECT_EQ(r.shared_bad_values, 0u) << to_string(d);
    EXPECT_EQ(r.full_errors, 0u) << to_string(d);
  }
}

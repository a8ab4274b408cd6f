// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dense_oracle.hpp"
#include "warpbench/apps/tensor.hpp"
#include "warpbench/bench/adversarial.hpp"
#include "warpbench/bench/aging.hpp"
#include "warpbench/bench/load.hpp"
#include "warpbench/bench/passes.hpp"
#include "warpbench/bench/pool.hpp"
#include "warpbench/bench/stress.hpp"
#include "warpbench/bench/workload.hpp"
#include "warpbench/tables/any_table.hpp"

using namespace warpbench;
using namespace warpbench::bench;

namespace {

// 1 / sum_{i<=1000} i^-0.99, computed offline with math.fsum.
constexpr double kZipfRank1 = 0.129384;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::vector<Design> safe_designs() {
  std::vector<Design> out;
  for (Design d : kAllDesigns)
    if (d != Design::unsafe_reference) out.push_back(d);
  return out;
}

std::vector<Design> stable_safe_designs() {
  std::vector<Design> out;
  for (Design d : safe_designs())
    if (is_stable(d)) out.push_back(d);
  return out;
}

TableConfig config_for(Design d, std::size_t slots) {
  TableConfig c;
  c.design = d;
  c.capacity_slots = slots;
  return validate_config(c);
}

std::string fixed(double v, int digits = 3) { return instrument::format_fixed(v, digits); }

// 1. Every synchronized design survives the race replay.
void adversarial_safety(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  for (Design d : safe_designs()) {
    AdversarialSpec spec;
    spec.design = d;
    spec.buckets = 10'000;
    spec.trials = 100;
    const auto r = run_adversarial(spec);
    o.detail << " " << to_string(d) << "=" << r.duplicate_keys;
    o.require(r.duplicate_keys == 0, std::string(to_string(d)) + " duplicates");
    o.require(r.replays >= 1'000'000, std::string(to_string(d)) + " replays");
    o.require(r.full_errors == 0, std::string(to_string(d)) + " full errors");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.detail << " runtime=" << fixed(secs, 1) << "s";
  o.require(secs < 300.0, "runtime under 5 minutes");
}

// 2. The lock-elided reference gets caught.
void adversarial_sensitivity(Outcome& o) {
  AdversarialSpec spec;
  spec.design = Design::unsafe_reference;
  spec.buckets = 10'000;
  spec.trials = 100;
  const auto r = run_adversarial(spec);
  o.detail << " replays=" << r.replays << " duplicate_keys=" << r.duplicate_keys
           << " trials_with_duplicates=" << r.trials_with_duplicates;
  o.require(r.replays >= 1'000'000, "10^6 replays");
  o.require(r.duplicate_keys >= 1, "at least one duplicate");
}

// 3. Single-threaded mixed ops against std::unordered_map.
void oracle_equivalence(Outcome& o) {
  constexpr std::size_t kOps = 100'000, kKeys = 40'000;
  std::uint64_t mismatches = 0;
  for (Design d : safe_designs()) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto t = make_table(config_for(d, 1 << 17));
      std::unordered_map<Key, Value> ref;
      const KeyStream ks(seed * 7919);
      SplitMix rng(seed);
      std::uint64_t bad = 0;
      for (std::size_t i = 0; i < kOps; ++i) {
        const Key k = ks.at(rng.below(kKeys));
        const Value v = rng() | 1;
        switch (rng.below(5)) {
          case 0: {  // insert if absent
            const auto s = t->upsert(k, v, merge::keep_existing);
            const bool fresh = ref.emplace(k, v).second;
            bad += s != (fresh ? UpsertStatus::inserted : UpsertStatus::updated);
            break;
          }
          case 1: {  // overwrite
            const auto s = t->upsert(k, v, merge::replace);
            const bool fresh = !ref.count(k);
            ref[k] = v;
            bad += s != (fresh ? UpsertStatus::inserted : UpsertStatus::updated);
            break;
          }
          case 2: {  // accumulate
            const auto s = t->upsert(k, v, merge::add);
            auto [it, fresh] = ref.emplace(k, v);
            if (!fresh) it->second += v;
            bad += s != (fresh ? UpsertStatus::inserted : UpsertStatus::updated);
            break;
          }
          case 3: bad += t->erase(k) != (ref.erase(k) == 1); break;
          default: {
            const auto got = t->query(k);
            const auto it = ref.find(k);
            bad += it == ref.end() ? got.has_value() : (!got || *got != it->second);
          }
        }
      }
      std::size_t seen = 0;
      t->for_each([&](Key k, Value v, const Slot*) {
        ++seen;
        const auto it = ref.find(k);
        bad += it == ref.end() || it->second != v;
      });
      bad += seen != ref.size();
      if (bad) o.detail << " " << to_string(d) << "/seed" << seed << "=" << bad;
      mismatches += bad;
    }
  }
  o.detail << " designs=" << safe_designs().size() << " seeds=3 ops=" << kOps << " mismatches=" << mismatches;
  o.require(mismatches == 0, "no mismatches");
}

// 4. Eight threads hammering shared and private key ranges.
void concurrent_stress(Outcome& o) {
  for (Design d : safe_designs()) {
    StressSpec spec;
    spec.table = config_for(d, 1 << 18);
    spec.threads = 8;
    spec.ops = 1'000'000;
    const auto r = run_stress(spec);
    const auto bad = r.duplicate_keys + r.private_mismatches + r.shared_bad_values + r.full_errors;
    o.detail << " " << to_string(d) << "=" << bad;
    o.require(r.ops == spec.ops, std::string(to_string(d)) + " op count");
    o.require(r.duplicate_keys == 0, std::string(to_string(d)) + " duplicate_scan empty");
    o.require(r.private_mismatches == 0, std::string(to_string(d)) + " private partition matches oracle");
    o.require(r.shared_bad_values == 0, std::string(to_string(d)) + " shared values written by someone");
    o.require(r.full_errors == 0, std::string(to_string(d)) + " no full errors");
  }
}

// 5. Open addressing reaches 90% at a million slots.
void load_capability(Outcome& o, ThreadPool& pool) {
  for (Design d : kAllDesigns) {
    if (!is_open_addressing(d)) continue;
    auto t = make_table(config_for(d, 1'000'000));
    const auto keys = gen_uniform_keys(5, t->capacity_slots() * 9 / 10);
    const auto r = run_pass(pool, *t, keys, OpKind::insert);
    const auto full = r.failed(OpKind::insert);
    o.detail << " " << to_string(d) << ":lf=" << fixed(t->load_factor(), 4) << ",full=" << full;
    o.require(full == 0, std::string(to_string(d)) + " zero full errors");
    o.require(t->load_factor() >= 0.9 - 1e-9, std::string(to_string(d)) + " load 0.90");
  }
}

// 6. Bytes per stored pair at 90% load.
void space_accounting(Outcome& o, ThreadPool& pool) {
  for (Design d : kAllDesigns) {
    if (d == Design::unsafe_reference) continue;
    auto t = make_table(config_for(d, 1'000'000));
    const auto keys = gen_uniform_keys(6, t->capacity_slots() * 9 / 10);
    (void)run_pass(pool, *t, keys, OpKind::insert);
    const double n = static_cast<double>(t->occupied());
    const double eff = t->space_efficiency();
    const double storage_eff = 100.0 * n * sizeof(Slot) / static_cast<double>(t->bytes_allocated() - t->lock_bytes());
    o.detail << " " << to_string(d) << "=" << fixed(eff, 2) << "%";
    const std::string name(to_string(d));
    if (d == Design::chaining) {
      o.require(eff >= 35.0 && eff <= 55.0, "chaining efficiency in [35, 55], measured " + fixed(eff, 2));
    } else if (has_metadata(d)) {
      o.require(std::abs(eff - 80.0) <= 0.1, name + " efficiency 80.0 +-0.1");
    } else {
      o.detail << "(storage " << fixed(storage_eff, 4) << "%)";
      o.require(std::abs(storage_eff - 90.0) < 1e-9, name + " storage efficiency exactly 90.0");
      o.require(std::abs(eff - 90.0) <= 0.1, name + " total efficiency 90.0 +-0.1 with lock bits");
    }
  }
}

double negative_probe_mean(Design d, double load, ThreadPool& pool) {
  TableConfig cfg = config_for(d, 1 << 20);
  cfg.line_bytes = 128;
  cfg.bucket_size = 32;
  auto t = make_table(validate_config(cfg), tables::HookKind::probes);
  const auto keys = gen_uniform_keys(7, static_cast<std::size_t>(load * static_cast<double>(t->capacity_slots())));
  (void)run_pass(pool, *t, keys, OpKind::insert);
  const auto neg = gen_uniform_keys(7, 200'000, kAbsentOffset);
  return run_pass(pool, *t, neg, OpKind::query_neg, true).probe_mean(OpKind::query_neg).value_or(std::nan(""));
}

// 7. Tags cut negative-query probes.
void metadata_probes(Outcome& o, ThreadPool& pool) {
  const double md = negative_probe_mean(Design::p2_md, 0.87, pool);
  const double plain = negative_probe_mean(Design::p2, 0.87, pool);
  o.detail << " load=0.87 p2_md=" << fixed(md) << " p2=" << fixed(plain) << " ratio=" << fixed(plain / md, 2);
  o.require(md >= 1.8 && md <= 2.6, "p2_md negative mean in [1.8, 2.6]");
  o.require(plain >= 3.0 * md, "p2 at least 3x p2_md");
}

double aged_negative_mean(Design d, ThreadPool& pool) {
  AgingSpec spec;
  spec.table = config_for(d, 100'000);
  spec.iterations = 200;
  spec.probe_pass = true;
  spec.throughput_pass = false;
  const auto r = run_aging(spec, pool);
  if (r.iterations.empty() || r.fill_errors || r.failures) return std::nan("");
  return r.iterations.back().probe_mean(OpKind::query_neg).value_or(std::nan(""));
}

// 8. Tombstones wreck double hashing but not bucketed tags.
void aging_divergence(Outcome& o, ThreadPool& pool) {
  const double dbl = aged_negative_mean(Design::double_hashing, pool);
  const double md = aged_negative_mean(Design::p2_md, pool);
  o.detail << " double=" << fixed(dbl, 2) << " p2_md=" << fixed(md, 2) << " ratio=" << fixed(dbl / md, 2);
  o.require(!std::isnan(dbl) && !std::isnan(md), "aging runs without errors");
  o.require(dbl >= 3.0 * md, "double at least 3x p2_md");
}

// 9. Keys never move while live.
void stability(Outcome& o) {
  constexpr std::size_t kTracked = 2000, kOps = 100'000;
  for (Design d : stable_safe_designs()) {
    auto t = make_table(config_for(d, 1 << 16));
    const KeyStream ks(9);
    std::vector<Key> tracked;
    std::vector<const Slot*> where;
    for (std::size_t i = 0; i < kTracked; ++i) {
      tracked.push_back(ks.at(i));
      (void)t->upsert(tracked.back(), 1, merge::keep_existing);
      where.push_back(t->locate(tracked.back()));
    }
    // Churn on other keys plus in-place updates of tracked ones.
    SplitMix rng(d == Design::chaining ? 99 : 9);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < kOps; ++i) {
      const auto r = rng.below(10);
      if (r == 0) {
        (void)t->upsert(tracked[rng.below(kTracked)], 1, merge::add);
        continue;
      }
      const Key k = ks.at(kTracked + rng.below(40'000));
      if (r < 5) (void)t->upsert(k, 1, merge::keep_existing);
      else if (r < 9) (void)t->erase(k);
      else (void)t->query(k);
    }
    for (std::size_t i = 0; i < kTracked; ++i) moved += t->locate(tracked[i]) != where[i];
    std::size_t gone = 0;
    for (std::size_t i = 0; i < kTracked; ++i) {
      (void)t->erase(tracked[i]);
      gone += t->locate(tracked[i]) == nullptr;
    }
    o.detail << " " << to_string(d) << ":moved=" << moved;
    o.require(moved == 0, std::string(to_string(d)) + " addresses unchanged");
    o.require(gone == kTracked, std::string(to_string(d)) + " erase clears the slot");
  }
  o.detail << " (cuckoo exempt)";
}

// 10. Sparse contraction equals brute force.
void sptc(Outcome& o, ThreadPool& pool) {
  constexpr int kInstances = 50;
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::uint64_t> ext(1, 8);
  std::size_t compared = 0, wrong = 0, nnz = 0;
  for (int inst = 0; inst < kInstances; ++inst) {
    std::vector<std::uint64_t> xd(4), yd(4);
    for (auto& e : xd) e = ext(rng);
    for (auto& e : yd) e = ext(rng);
    // One contracted mode: x mode 3 against y mode 0.
    yd[0] = xd[3];
    // Three contracted modes: x (0,1,2) against y (3,1,2) after the shapes line up.
    auto yd3 = yd;
    yd3[3] = xd[0], yd3[1] = xd[1], yd3[2] = xd[2];

    const auto x = oracle::random_int_tensor(rng, xd, 0.15);
    const auto y1 = oracle::random_int_tensor(rng, yd, 0.15);
    const auto y3 = oracle::random_int_tensor(rng, yd3, 0.15);
    const std::vector<std::size_t> xm1{3}, ym1{0}, xm3{0, 1, 2}, ym3{3, 1, 2};
    const auto want1 = oracle::dense_contract(x, y1, xm1, ym1);
    const auto want3 = oracle::dense_contract(x, y3, xm3, ym3);
    nnz += want1.nnz() + want3.nnz();
    for (Design d : stable_safe_designs()) {
      apps::ContractOptions opt;
      opt.design = d;
      auto got1 = apps::contract(x, y1, xm1, ym1, pool, opt);
      auto got3 = apps::contract(x, y3, xm3, ym3, pool, opt);
      got1.canonicalize();
      got3.canonicalize();
      wrong += !(got1 == want1);
      wrong += !(got3 == want3);
      compared += 2;
    }
  }
  o.detail << " instances=" << kInstances << " contractions=" << compared << " output_nnz=" << nnz
           << " mismatches=" << wrong;
  o.require(wrong == 0, "all contractions exact");
}

// 11. Zipf head probability.
void zipf(Outcome& o) {
  const ZipfState z(1000, 0.99);
  SplitMix rng(11);
  std::uint64_t ones = 0;
  constexpr std::uint64_t kDraws = 1'000'000;
  for (std::uint64_t i = 0; i < kDraws; ++i) ones += z.next(rng) == 1;
  const double empirical = static_cast<double>(ones) / kDraws;
  const double analytic = z.probability(1);
  const double rel = std::abs(empirical - analytic) / analytic;
  o.detail << " empirical=" << fixed(empirical, 6) << " analytic=" << fixed(analytic, 6) << " rel=" << fixed(rel, 4);
  o.require(std::abs(analytic - kZipfRank1) < 1e-6, "analytic matches the frozen value");
  o.require(rel <= 0.05, "within 5% relative");
}

// 12. Phased mode drops lock traffic without changing results.
void phased_sanity(Outcome& o, ThreadPool& pool) {
  for (Design d : safe_designs()) {
    OverheadSpec spec;
    spec.table = config_for(d, 1 << 18);
    const auto r = run_overhead(spec, pool);
    const std::string name(to_string(d));
    o.detail << " " << name << ":locks=" << r.phased_lock_probes << ",overhead%=";
    const char* sep = "";
    for (const auto& [op, pct] : r.overhead_pct) o.detail << sep << op << ":" << fixed(pct, 1), sep = "/";
    o.require(r.phased_lock_probes == 0, name + " phased lock probes zero");
    o.require(r.concurrent_lock_probes > 0, name + " concurrent pass takes locks");
    o.require(r.contents_equal, name + " identical contents");
    o.require(r.errors == 0, name + " no errors");
  }
}

// 13. Probe means do not depend on table size.
void scaling(Outcome& o, ThreadPool& pool) {
  for (Design d : safe_designs()) {
    ScalingSpec spec;
    spec.table = config_for(d, 1 << 16);
    spec.sizes = {100'000, 1'000'000, 10'000'000};
    spec.throughput_pass = false;
    spec.query_sample = 200'000;
    const auto r = run_scaling(spec, pool);
    const double drift = r.max_probe_drift();
    std::uint64_t full = 0;
    for (const auto& p : r.points) full += p.full_errors;
    o.detail << " " << to_string(d) << "=" << fixed(100 * drift, 2) << "%";
    o.require(drift <= 0.02, std::string(to_string(d)) + " drift within 2%");
    o.require(full == 0, std::string(to_string(d)) + " no full errors");
  }
}

}  // namespace

int main(int argc, char** argv) {
  ThreadPool pool(default_threads());
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"adversarial safety", adversarial_safety},
      {"adversarial sensitivity", adversarial_sensitivity},
      {"oracle equivalence", oracle_equivalence},
      {"concurrent stress", concurrent_stress},
      {"load capability", [&](Outcome& o) { load_capability(o, pool); }},
      {"space accounting", [&](Outcome& o) { space_accounting(o, pool); }},
      {"metadata probes", [&](Outcome& o) { metadata_probes(o, pool); }},
      {"aging divergence", [&](Outcome& o) { aging_divergence(o, pool); }},
      {"stability", stability},
      {"sptc correctness", [&](Outcome& o) { sptc(o, pool); }},
      {"zipf generator", zipf},
      {"phased sanity", [&](Outcome& o) { phased_sanity(o, pool); }},
      {"scaling flatness", [&](Outcome& o) { scaling(o, pool); }},
  };

  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));

  std::printf("# pair publication: %s, threads: %u\n", std::string(sync::to_string(sync::pair_atomicity())).c_str(),
              pool.size());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s %2zu %s (%.1fs):%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("# %d failed\n", failed);
  return failed ? 1 : 0;
}

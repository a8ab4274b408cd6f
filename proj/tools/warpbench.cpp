// warpbench: benchmark and application driver for the concurrent tables.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "warpbench/apps/cache.hpp"
#include "warpbench/apps/tensor.hpp"
#include "warpbench/apps/ycsb.hpp"
#include "warpbench/bench/adversarial.hpp"
#include "warpbench/bench/aging.hpp"
#include "warpbench/bench/load.hpp"
#include "warpbench/instrument/csv.hpp"
#include "warpbench/sync/slot.hpp"

namespace {

using namespace warpbench;

constexpr const char* kVersion = "0.1.0";

// Failed benchmark assertion (exit 1).
class check_failed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string design;
  std::size_t capacity = 0;
  unsigned threads = 0;
  std::uint64_t seed = 1;
  std::string mode;
  bool probe_pass = false;
  std::string config_path;
  std::string out_path;
  bool print_config = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--design", c.design, "table design")
      ->check(CLI::IsMember({"double", "double_md", "p2", "p2_md", "iceberg", "iceberg_md", "cuckoo", "chaining",
                             "unsafe_reference"}));
  sub->add_option("--capacity", c.capacity, "table capacity in slots")->check(CLI::PositiveNumber);
  sub->add_option("--threads", c.threads, "worker threads (default: WARPBENCH_THREADS or hardware)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "workload seed");
  sub->add_option("--mode", c.mode, "synchronization mode")->check(CLI::IsMember({"concurrent", "phased"}));
  sub->add_flag("--probe-pass", c.probe_pass, "add an instrumented pass and report probe means");
  sub->add_option("--config", c.config_path, "table config file (key=value lines)")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out_path, "CSV output path (default: stdout)");
  sub->add_flag("--print-config", c.print_config, "print the resolved table config to stderr");
}

TableConfig resolve_config(const Common& c, Design fallback, std::size_t fallback_capacity = 1'000'000) {
  TableConfig cfg;
  cfg.design = fallback;
  cfg.capacity_slots = fallback_capacity;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    cfg = parse_config(in, cfg);
  }
  if (!c.design.empty()) cfg.design = parse_design(c.design);
  if (c.capacity) cfg.capacity_slots = c.capacity;
  if (!c.mode.empty()) cfg.mode = parse_mode(c.mode);
  cfg = validate_config(cfg);
  if (c.print_config) std::cerr << to_text(cfg);
  return cfg;
}

unsigned resolve_threads(const Common& c) { return c.threads ? c.threads : bench::default_threads(); }

/// CSV sink: the --out file or stdout, with the run manifest up front.
class Output {
 public:
  Output(const Common& c, const std::string& command, const TableConfig* cfg, unsigned threads,
         std::vector<std::string> extra_columns = {}) {
    if (!c.out_path.empty()) {
      file_ = std::make_unique<std::ofstream>(c.out_path);
      if (!*file_) throw std::runtime_error("cannot open " + c.out_path + " for writing");
    }
    csv_ = std::make_unique<instrument::CsvWriter>(file_ ? *file_ : std::cout, std::move(extra_columns));
    csv_->meta("tool", std::string("warpbench ") + kVersion);
    csv_->meta("command", command);
    csv_->meta("seed", std::to_string(c.seed));
    csv_->meta("threads", std::to_string(threads));
    csv_->meta("capability", sync::to_string(sync::pair_atomicity()));
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    csv_->meta("timestamp", stamp);
    if (cfg) {
      std::istringstream lines(to_text(*cfg));
      for (std::string l; std::getline(lines, l);) csv_->meta("config", l);
      const auto t = make_table(*cfg);
      csv_->meta("num_buckets", std::to_string(t->num_buckets()));
      csv_->meta("num_primary_buckets", std::to_string(t->num_primary_buckets()));
    }
  }

  void meta(const std::string& k, const std::string& v) { csv_->meta(k, v); }
  void rows(const std::vector<instrument::CsvRow>& rs) {
    csv_->header();
    for (const auto& r : rs) csv_->row(r);
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::unique_ptr<instrument::CsvWriter> csv_;
};

int cmd_load(const Common& c) {
  const TableConfig cfg = resolve_config(c, Design::p2_md);
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  bench::LoadSpec spec{.table = cfg, .seed = c.seed, .probe_pass = c.probe_pass};
  const auto res = bench::run_load(spec, pool);
  Output out(c, "load", &cfg, threads);
  out.rows(res.rows);
  std::cerr << "load " << to_string(cfg.design) << ": final load " << res.final_load << ", full errors "
            << res.full_errors << ", lookup errors " << res.lookup_errors << '\n';
  if (res.lookup_errors) throw check_failed("lookups disagreed with the inserted key set");
  if (is_open_addressing(cfg.design) && res.full_errors)
    throw check_failed(std::to_string(res.full_errors) + " inserts reported full below 90% load");
  return 0;
}

int cmd_aging(const Common& c, std::size_t iterations) {
  const TableConfig cfg = resolve_config(c, Design::p2_md);
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  bench::AgingSpec spec{.table = cfg, .seed = c.seed, .iterations = iterations,
                        .probe_pass = c.probe_pass};
  const auto res = bench::run_aging(spec, pool);
  Output out(c, "aging", &cfg, threads);
  out.rows(res.rows);
  std::cerr << "aging " << to_string(cfg.design) << ": " << res.iterations.size() << " iterations, failures "
            << res.failures << '\n';
  if (res.failures || res.fill_errors) throw check_failed("aging bookkeeping failed");
  return 0;
}

int cmd_scaling(const Common& c, const std::vector<std::size_t>& sizes) {
  const TableConfig cfg = resolve_config(c, Design::p2_md);
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  bench::ScalingSpec spec{.table = cfg, .sizes = sizes, .seed = c.seed};
  const auto res = bench::run_scaling(spec, pool);
  Output out(c, "scaling", &cfg, threads);
  out.rows(res.rows);
  std::cerr << "scaling " << to_string(cfg.design) << ": max probe drift " << 100.0 * res.max_probe_drift()
            << "%\n";
  for (const auto& p : res.points)
    if (p.full_errors && is_open_addressing(cfg.design)) throw check_failed("inserts reported full");
  return 0;
}

int cmd_overhead(const Common& c) {
  const TableConfig cfg = resolve_config(c, Design::p2_md);
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  bench::OverheadSpec spec{.table = cfg, .seed = c.seed};
  const auto res = bench::run_overhead(spec, pool);
  Output out(c, "overhead", &cfg, threads);
  for (const auto& [op, pct] : res.overhead_pct) out.meta("overhead_pct_" + op, instrument::format_fixed(pct, 3));
  out.rows(res.rows);
  std::cerr << "overhead " << to_string(cfg.design) << ":";
  for (const auto& [op, pct] : res.overhead_pct) std::cerr << ' ' << op << '=' << pct << '%';
  std::cerr << ", phased lock probes " << res.phased_lock_probes << ", contents "
            << (res.contents_equal ? "equal" : "DIFFER") << '\n';
  if (!res.contents_equal || res.phased_lock_probes || res.errors)
    throw check_failed("phased and concurrent runs disagree");
  return 0;
}

int cmd_adversarial(const Common& c, std::size_t buckets, std::size_t trials, unsigned yield_per_mille,
                    bool sequential) {
  bench::AdversarialSpec spec;
  spec.design = c.design.empty() ? Design::p2 : parse_design(c.design);
  spec.buckets = buckets;
  spec.trials = trials;
  spec.seed = c.seed;
  spec.yield_per_mille = yield_per_mille;
  spec.concurrent = !sequential;
  const auto res = bench::run_adversarial(spec);
  std::cerr << "adversarial " << to_string(spec.design) << ": " << res.replays << " bucket replays, "
            << res.duplicate_keys << " duplicated keys in " << res.trials_with_duplicates << " of " << trials
            << " trials\n";
  Output out(c, "adversarial", nullptr, 3);
  out.meta("design", std::string(to_string(spec.design)));
  out.meta("primary_buckets", std::to_string(res.primary_buckets));
  out.meta("trials", std::to_string(trials));
  out.meta("replays", std::to_string(res.replays));
  out.meta("duplicate_keys", std::to_string(res.duplicate_keys));
  if (spec.design == Design::unsafe_reference) {
    if (res.duplicate_keys) std::cerr << "unsafe_reference produced duplicates, as expected without its lock\n";
    return 0;
  }
  if (res.duplicate_keys) throw check_failed("duplicates found in a synchronized design");
  return 0;
}

int cmd_cache(const Common& c, std::size_t universe, double query_factor, std::vector<double> ratios) {
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  apps::CacheSpec spec;
  spec.design = c.design.empty() ? Design::p2_md : parse_design(c.design);
  spec.universe = universe;
  spec.query_factor = query_factor;
  spec.ratios = std::move(ratios);
  spec.seed = c.seed;
  const auto res = apps::run_cache(spec, pool);
  Output out(c, "cache", nullptr, threads, {"hit_rate"});
  out.meta("universe", std::to_string(universe));
  out.rows(res.rows);
  for (const auto& p : res.points)
    std::cerr << "ratio " << p.ratio << ": hit rate " << p.hit_rate << " (fifo model " << p.expected_hit_rate
              << ")\n";
  for (const auto& p : res.points)
    if (!p.conserved) throw check_failed("cache contents diverged from the FIFO ring");
  return 0;
}

int cmd_ycsb(const Common& c, const std::string& workload, std::size_t universe, std::uint64_t ops, double theta) {
  const TableConfig cfg = resolve_config(c, Design::p2_md, universe);
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  apps::YcsbSpec spec;
  spec.workload = apps::parse_workload(workload);
  spec.universe = universe;
  spec.ops = ops;
  spec.theta = theta;
  spec.seed = c.seed;
  const auto res = apps::run_ycsb(spec, cfg, pool);
  Output out(c, "ycsb", nullptr, threads, {"workload"});
  out.meta("design", std::string(to_string(cfg.design)));
  out.rows(res.rows);
  std::cerr << "ycsb " << workload << ": " << res.updates << " updates, " << res.queries << " queries, "
            << res.mops << " Mops/s\n";
  if (res.query_misses || res.full_errors) throw check_failed("YCSB query missed a preloaded key");
  return 0;
}

std::vector<std::size_t> parse_modes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (tok.empty()) continue;
    out.push_back(std::stoul(tok));
  }
  return out;
}

int cmd_sptc(const Common& c, const std::string& x_path, const std::string& y_path, const std::string& x_modes,
             const std::string& y_modes, const std::string& out_tns) {
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  std::ifstream xf(x_path), yf(y_path);
  if (!xf) throw std::runtime_error("cannot read " + x_path);
  if (!yf) throw std::runtime_error("cannot read " + y_path);
  const auto x = apps::parse_tns(xf);
  const auto y = apps::parse_tns(yf);
  apps::ContractOptions opt;
  opt.design = c.design.empty() ? Design::p2_md : parse_design(c.design);
  instrument::Stopwatch sw;
  const auto z = apps::contract(x, y, parse_modes(x_modes), parse_modes(y_modes), pool, opt);
  const double secs = sw.seconds();
  if (!out_tns.empty()) {
    std::ofstream zf(out_tns);
    apps::write_tns(zf, z);
  }
  TableConfig cfg;
  cfg.design = opt.design;
  auto row = bench::base_row(validate_config(cfg), threads, "sptc");
  row.op = "contract";
  row.ops = x.nnz();
  row.seconds = secs;
  row.mops = secs > 0 ? static_cast<double>(x.nnz()) / secs / 1e6 : 0.0;
  row.load_factor = std::nan("");
  Output out(c, "sptc", nullptr, threads);
  out.meta("x_nnz", std::to_string(x.nnz()));
  out.meta("y_nnz", std::to_string(y.nnz()));
  out.meta("out_nnz", std::to_string(z.nnz()));
  out.rows({row});
  std::cerr << "sptc: " << z.nnz() << " output nonzeros in " << secs << " s\n";
  return 0;
}

int cmd_space(const Common& c, double load) {
  const unsigned threads = resolve_threads(c);
  bench::ThreadPool pool(threads);
  Output out(c, "space", nullptr, threads, {"bytes_per_pair", "efficiency_pct"});
  std::vector<instrument::CsvRow> rows;
  std::fprintf(stderr, "%-18s %12s %14s %12s\n", "design", "load", "bytes/pair", "efficiency");
  for (Design d : kAllDesigns) {
    TableConfig cfg;
    cfg.design = d;
    cfg.capacity_slots = c.capacity ? c.capacity : 1'000'000;
    cfg = validate_config(cfg);
    auto t = make_table(cfg);
    const auto n = static_cast<std::size_t>(load * static_cast<double>(t->capacity_slots()));
    const auto keys = bench::gen_uniform_keys(c.seed, n);
    const auto p = bench::run_pass(pool, *t, keys, bench::OpKind::insert);
    const double bpp = t->bytes_per_pair(), eff = t->space_efficiency();
    std::fprintf(stderr, "%-18s %12.4f %14.3f %11.2f%%\n", std::string(to_string(d)).c_str(), t->load_factor(), bpp,
                 eff);
    auto row = bench::pass_row(t->config(), threads, "space", bench::OpKind::insert, t->load_factor(), p);
    row.extra = {instrument::format_fixed(bpp, 4), instrument::format_fixed(eff, 4)};
    rows.push_back(std::move(row));
  }
  out.rows(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpbench: concurrent hash table benchmarks"};
  app.require_subcommand(1);
  Common c;

  auto* load = app.add_subcommand("load", "load-factor sweep 5%..90%, then delete sweep");
  add_common(load, c);

  auto* aging = app.add_subcommand("aging", "steady-state churn at 85% load");
  add_common(aging, c);
  std::size_t iterations = 1000;
  aging->add_option("--iterations", iterations, "aging iterations")->check(CLI::PositiveNumber);

  auto* scaling = app.add_subcommand("scaling", "insert and query throughput across table sizes");
  add_common(scaling, c);
  std::vector<std::size_t> sizes{100'000, 1'000'000, 10'000'000};
  scaling->add_option("--sizes", sizes, "capacities in slots")->delimiter(',');

  auto* overhead = app.add_subcommand("overhead", "concurrent versus phased synchronization cost");
  add_common(overhead, c);

  auto* adversarial = app.add_subcommand("adversarial", "per-bucket erase/insert/insert race replay");
  add_common(adversarial, c);
  std::size_t buckets = 10'000, trials = 1;
  unsigned yield_pm = 500;
  bool sequential = false;
  adversarial->add_option("--buckets", buckets, "primary buckets replayed per trial")->check(CLI::PositiveNumber);
  adversarial->add_option("--trials", trials, "fresh-table trials")->check(CLI::PositiveNumber);
  adversarial->add_option("--yield-per-mille", yield_pm, "stall chance at each scheduling point")
      ->check(CLI::Range(0u, 1000u));
  adversarial->add_flag("--sequential", sequential, "replay the script on one thread");

  auto* cache = app.add_subcommand("cache", "FIFO cache hit-rate sweep");
  add_common(cache, c);
  std::size_t universe = 100'000;
  double query_factor = 10.0;
  std::vector<double> ratios;
  cache->add_option("--universe", universe, "distinct keys")->check(CLI::PositiveNumber);
  cache->add_option("--query-factor", query_factor, "requests per key")->check(CLI::PositiveNumber);
  cache->add_option("--ratios", ratios, "cache sizes as fractions of the universe")->delimiter(',');

  auto* ycsb = app.add_subcommand("ycsb", "YCSB A/B/C over a preloaded universe");
  add_common(ycsb, c);
  std::string workload = "A";
  std::size_t y_universe = 1'000'000;
  std::uint64_t y_ops = 1'000'000;
  double theta = 0.99;
  ycsb->add_option("--workload", workload, "A, B or C")->check(CLI::IsMember({"A", "B", "C", "a", "b", "c"}));
  ycsb->add_option("--universe", y_universe, "preloaded keys")->check(CLI::PositiveNumber);
  ycsb->add_option("--ops", y_ops, "operations")->check(CLI::PositiveNumber);
  ycsb->add_option("--theta", theta, "Zipf skew")->check(CLI::Range(0.0, 10.0));

  auto* sptc = app.add_subcommand("sptc", "sparse tensor contraction of two .tns files");
  add_common(sptc, c);
  std::string x_path, y_path, x_modes, y_modes, out_tns;
  sptc->add_option("--x", x_path, "X tensor (.tns)")->required()->check(CLI::ExistingFile);
  sptc->add_option("--y", y_path, "Y tensor (.tns)")->required()->check(CLI::ExistingFile);
  sptc->add_option("--x-modes", x_modes, "contracted X modes, 0-based, comma separated")->required();
  sptc->add_option("--y-modes", y_modes, "contracted Y modes, 0-based, comma separated")->required();
  sptc->add_option("--out-tns", out_tns, "write the result as .tns");

  auto* space = app.add_subcommand("space", "bytes per pair and space efficiency for every design");
  add_common(space, c);
  double space_load = 0.90;
  space->add_option("--load", space_load, "fill fraction")->check(CLI::Range(0.01, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*load) return cmd_load(c);
    if (*aging) return cmd_aging(c, iterations);
    if (*scaling) return cmd_scaling(c, sizes);
    if (*overhead) return cmd_overhead(c);
    if (*adversarial) return cmd_adversarial(c, buckets, trials, yield_pm, sequential);
    if (*cache) return cmd_cache(c, universe, query_factor, ratios);
    if (*ycsb) return cmd_ycsb(c, workload, y_universe, y_ops, theta);
    if (*sptc) return cmd_sptc(c, x_path, y_path, x_modes, y_modes, out_tns);
    if (*space) return cmd_space(c, space_load);
  } catch (const check_failed& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

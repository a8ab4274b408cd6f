#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <unordered_map>

#include "warpbench/core/config.hpp"
#include "warpbench/core/hash.hpp"
#include "warpbench/core/types.hpp"

using namespace warpbench;

namespace {

// Upper 0.1% tail of chi-square; frozen from scipy.stats.chi2.ppf(0.999, df).
constexpr double kChi2Crit255 = 330.5197;
constexpr double kChi2Crit65534 = 66658.47;

double chi_square(const std::vector<std::size_t>& counts, double expected) {
  double x = 0;
  for (auto c : counts) x += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return x;
}

}  // namespace

TEST(Hash, SingleBucketAlwaysZero) {
  HashFamily f;
  for (Key k = 1; k < 1000; ++k)
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(hash(f, i, k, 1), 0u);
}

TEST(Hash, Deterministic) {
  HashFamily f, g;
  for (Key k = 1; k < 1000; ++k) EXPECT_EQ(hash(f, 0, k, 977), hash(g, 0, k, 977));
}

TEST(Hash, SequentialKeysUniformOverBuckets) {
  HashFamily f;
  for (std::size_t index = 0; index < f.size(); ++index) {
    std::vector<std::size_t> counts(256, 0);
    for (Key k = 1; k <= (1u << 16); ++k) ++counts[hash(f, index, k, 256)];
    EXPECT_LT(chi_square(counts, 256.0), kChi2Crit255) << "function " << index;
  }
}

TEST(Hash, FamilyMembersAreIndependentEnough) {
  // Sequential keys: pairs (h0, h1) on a 256x256 grid.
  HashFamily f;
  std::vector<std::size_t> counts(65536, 0);
  for (Key k = 1; k <= (1u << 22); ++k) ++counts[hash(f, 0, k, 256) * 256 + hash(f, 1, k, 256)];
  EXPECT_LT(chi_square(counts, 64.0), kChi2Crit65534);
}

TEST(Hash, ReduceStaysInRange) {
  for (std::uint64_t h : {0ull, 1ull, ~0ull, 0x8000000000000000ull})
    for (std::size_t n : {1u, 2u, 3u, 1000u}) EXPECT_LT(reduce(h, n), n);
}

TEST(Fingerprint, LowSixteenBits) {
  EXPECT_EQ(tag_from_hash(0xdeadbeef00002345ull), 0x2345);
  EXPECT_EQ(tag_from_hash(0x1234567800000000ull), 0x0001);
  EXPECT_EQ(tag_from_hash(0xffff), 0xffff);
}

TEST(Fingerprint, NeverEmpty) {
  HashFamily f;
  for (Key k = 1; k < 200000; ++k) ASSERT_NE(fingerprint(f, k), kEmptyTag);
}

TEST(Fingerprint, CollisionCountMatchesBirthdayBound) {
  // 1415 keys -> C(1415,2)/65535 = 15.27 expected equal-tag pairs; the
  // bounds are the Poisson 0.05% and 99.95% quantiles.
  HashFamily f;
  std::unordered_map<Tag, std::size_t> seen;
  for (Key k = 1; k <= 1415; ++k) ++seen[fingerprint(f, k * 0x9e3779b97f4a7c15ull)];
  std::size_t pairs = 0;
  for (const auto& [tag, n] : seen) pairs += n * (n - 1) / 2;
  EXPECT_GE(pairs, 4u);
  EXPECT_LE(pairs, 30u);
}

TEST(Keys, SentinelsRejected) {
  EXPECT_THROW(check_key(kEmptyKey), invalid_key_error);
  EXPECT_THROW(check_key(kTombstoneKey), invalid_key_error);
  EXPECT_THROW(check_key(kReservedKey), invalid_key_error);
  EXPECT_NO_THROW(check_key(42));
}

TEST(Keys, Classify) {
  EXPECT_EQ(classify(kEmptyKey), SlotState::empty);
  EXPECT_EQ(classify(kTombstoneKey), SlotState::tombstone);
  EXPECT_EQ(classify(kReservedKey), SlotState::reserved);
  EXPECT_EQ(classify(7), SlotState::occupied);
}

TEST(Design, NamesRoundTrip) {
  for (Design d : kAllDesigns) EXPECT_EQ(parse_design(to_string(d)), d);
  EXPECT_THROW((void)parse_design("linear"), std::invalid_argument);
  EXPECT_EQ(parse_mode("phased"), Mode::phased);
  EXPECT_THROW((void)parse_mode("bsp"), std::invalid_argument);
}

TEST(Config, LayoutExamples) {
  TableConfig c;
  c.design = Design::double_hashing;
  c.bucket_size = 8;
  c.capacity_slots = 1024;
  EXPECT_NO_THROW((void)validate_config(c));
  c.bucket_size = 32;
  EXPECT_NO_THROW((void)validate_config(c));
  c.bucket_size = 8;
  c.capacity_slots = 100;
  EXPECT_THROW((void)validate_config(c), config_error);
}

TEST(Config, DefaultsFilled) {
  TableConfig c;
  c.design = Design::p2_md;
  c.capacity_slots = 1 << 12;
  EXPECT_EQ(validate_config(c).bucket_size, 32u);
  c.design = Design::double_hashing;
  EXPECT_EQ(validate_config(c).bucket_size, 8u);
  c.design = Design::chaining;
  c.capacity_slots = 100;
  const auto v = validate_config(c);
  EXPECT_EQ(v.bucket_size, 7u);
  EXPECT_EQ(v.capacity_slots % 7, 0u);
  EXPECT_GE(v.capacity_slots, 100u);
}

TEST(Config, RejectsEveryProblemAtOnce) {
  TableConfig c;
  c.design = Design::cuckoo;
  c.capacity_slots = 100;
  c.bucket_size = 8;
  c.line_bytes = 100;
  c.cuckoo_ways = 9;
  c.probe_cap = 0;
  try {
    (void)validate_config(c);
    FAIL() << "expected config_error";
  } catch (const config_error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line_bytes"), std::string::npos);
    EXPECT_NE(what.find("cuckoo_ways"), std::string::npos);
    EXPECT_NE(what.find("probe_cap"), std::string::npos);
  }
}

TEST(Config, BucketNeitherMultipleNorHalfOfLine) {
  TableConfig c;
  c.design = Design::p2;
  c.bucket_size = 2;  // 32 bytes against a 128-byte line
  c.capacity_slots = 64;
  EXPECT_THROW((void)validate_config(c), config_error);
  c.bucket_size = 4;  // half a line
  EXPECT_NO_THROW((void)validate_config(c));
}

TEST(Config, TooFewSeeds) {
  TableConfig c;
  c.design = Design::cuckoo;
  c.cuckoo_ways = 4;
  c.seeds = HashFamily{1, 2, 3};
  c.capacity_slots = 1 << 10;
  EXPECT_THROW((void)validate_config(c), config_error);
}

TEST(Config, TextRoundTrip) {
  TableConfig c;
  c.design = Design::iceberg_md;
  c.capacity_slots = 4096;
  c.mode = Mode::phased;
  c.seeds = HashFamily{11, 22, 33};
  c.iceberg_front_fraction = 0.8;
  std::istringstream in(to_text(c));
  const TableConfig back = parse_config(in);
  EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, ParseErrorsNameTheLine) {
  std::istringstream in("# comment\ndesign=p2\ncapacity_slots=lots\n");
  try {
    (void)parse_config(in);
    FAIL() << "expected a parse error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream unknown("colour=blue\n");
  EXPECT_THROW((void)parse_config(unknown), std::invalid_argument);
  std::istringstream no_eq("design p2\n");
  EXPECT_THROW((void)parse_config(no_eq), std::invalid_argument);
}

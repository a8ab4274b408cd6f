#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>

#include "warpbench/core/config.hpp"
#include "warpbench/tables/chaining_table.hpp"
#include "warpbench/tables/cuckoo_table.hpp"
#include "warpbench/tables/double_table.hpp"
#include "warpbench/tables/hooks.hpp"
#include "warpbench/tables/iceberg_table.hpp"
#include "warpbench/tables/merge.hpp"
#include "warpbench/tables/p2_table.hpp"

namespace warpbench {

using SlotVisitor = std::function<void(Key, Value, const Slot*)>;

/// Runtime-polymorphic view of any table design. Benchmarks and apps hold
/// this; tests that poke design internals use the concrete templates.
class Table {
 public:
  virtual ~Table() = default;

  virtual UpsertStatus upsert(Key key, Value value, MergeFn merge) = 0;
  [[nodiscard]] virtual std::optional<Value> query(Key key) const = 0;
  virtual bool erase(Key key) = 0;

  [[nodiscard]] virtual std::size_t primary_bucket(Key key) const = 0;
  [[nodiscard]] virtual std::size_t num_buckets() const = 0;
  [[nodiscard]] virtual std::size_t num_primary_buckets() const = 0;
  [[nodiscard]] virtual std::size_t capacity_slots() const = 0;
  [[nodiscard]] virtual std::size_t bytes_allocated() const = 0;
  [[nodiscard]] virtual std::size_t lock_bytes() const = 0;
  [[nodiscard]] virtual const TableConfig& config() const = 0;
  [[nodiscard]] virtual tables::HookKind hooks() const = 0;

  /// Tag-free lookup over the same buckets; the reference a tag path must match.
  [[nodiscard]] virtual std::optional<Value> query_untagged(Key key) const = 0;
  /// Address of the slot holding `key`, or null. Quiescent use only.
  [[nodiscard]] virtual const Slot* locate(Key key) const = 0;
  virtual void for_each(const SlotVisitor& fn) const = 0;

  // Quiescent accounting.

  [[nodiscard]] std::size_t occupied() const {
    std::size_t n = 0;
    for_each([&](Key, Value, const Slot*) { ++n; });
    return n;
  }

  [[nodiscard]] double load_factor() const {
    return static_cast<double>(occupied()) / static_cast<double>(capacity_slots());
  }

  [[nodiscard]] double bytes_per_pair() const {
    const std::size_t n = occupied();
    return n ? static_cast<double>(bytes_allocated()) / static_cast<double>(n) : 0.0;
  }

  /// Payload bytes over allocated bytes, in percent.
  [[nodiscard]] double space_efficiency() const {
    const double bpp = bytes_per_pair();
    return bpp > 0 ? 100.0 * static_cast<double>(sizeof(Slot)) / bpp : 0.0;
  }

  /// Keys held by more than one OCCUPIED slot, with their counts.
  [[nodiscard]] std::unordered_map<Key, std::size_t> duplicate_scan() const {
    std::unordered_map<Key, std::size_t> counts;
    for_each([&](Key k, Value, const Slot*) { ++counts[k]; });
    std::erase_if(counts, [](const auto& kv) { return kv.second < 2; });
    return counts;
  }
};

namespace tables {

template <class Impl, HookKind kHooks>
class TableAdapter final : public Table {
 public:
  explicit TableAdapter(const TableConfig& cfg) : impl_(cfg) {}

  UpsertStatus upsert(Key key, Value value, MergeFn merge) override { return impl_.upsert(key, value, merge); }
  std::optional<Value> query(Key key) const override { return impl_.query(key); }
  bool erase(Key key) override { return impl_.erase(key); }

  std::size_t primary_bucket(Key key) const override { return impl_.primary_bucket(key); }
  std::size_t num_buckets() const override { return impl_.num_buckets(); }
  std::size_t num_primary_buckets() const override { return impl_.num_primary_buckets(); }
  std::size_t capacity_slots() const override { return impl_.capacity_slots(); }
  std::size_t bytes_allocated() const override { return impl_.bytes_allocated(); }
  std::size_t lock_bytes() const override { return impl_.lock_bytes(); }
  const TableConfig& config() const override { return impl_.config(); }
  HookKind hooks() const override { return kHooks; }

  std::optional<Value> query_untagged(Key key) const override { return impl_.query_untagged(key); }
  const Slot* locate(Key key) const override { return impl_.locate(key); }
  void for_each(const SlotVisitor& fn) const override { impl_.for_each(fn); }

  Impl& impl() noexcept { return impl_; }
  const Impl& impl() const noexcept { return impl_; }

 private:
  Impl impl_;
};

template <HookKind kKind>
struct HooksFor;
template <>
struct HooksFor<HookKind::none> {
  using type = NullHooks;
};
template <>
struct HooksFor<HookKind::probes> {
  using type = ProbeHooks;
};
template <>
struct HooksFor<HookKind::race> {
  using type = RaceHooks;
};

template <HookKind kKind>
std::unique_ptr<Table> make_with_hooks(const TableConfig& cfg) {
  using H = typename HooksFor<kKind>::type;
  switch (cfg.design) {
    case Design::double_hashing: return std::make_unique<TableAdapter<DoubleTable<false, H>, kKind>>(cfg);
    case Design::double_md: return std::make_unique<TableAdapter<DoubleTable<true, H>, kKind>>(cfg);
    case Design::p2: return std::make_unique<TableAdapter<P2Table<false, true, H>, kKind>>(cfg);
    case Design::p2_md: return std::make_unique<TableAdapter<P2Table<true, true, H>, kKind>>(cfg);
    case Design::iceberg: return std::make_unique<TableAdapter<IcebergTable<false, H>, kKind>>(cfg);
    case Design::iceberg_md: return std::make_unique<TableAdapter<IcebergTable<true, H>, kKind>>(cfg);
    case Design::cuckoo: return std::make_unique<TableAdapter<CuckooTable<H>, kKind>>(cfg);
    case Design::chaining: return std::make_unique<TableAdapter<ChainingTable<H>, kKind>>(cfg);
    case Design::unsafe_reference: return std::make_unique<TableAdapter<P2Table<false, false, H>, kKind>>(cfg);
  }
  throw std::invalid_argument("unknown design");
}

}  // namespace tables

/// Builds a table for cfg.design with the chosen instrumentation.
[[nodiscard]] inline std::unique_ptr<Table> make_table(const TableConfig& cfg,
                                                       tables::HookKind hooks = tables::HookKind::none) {
  switch (hooks) {
    case tables::HookKind::none: return tables::make_with_hooks<tables::HookKind::none>(cfg);
    case tables::HookKind::probes: return tables::make_with_hooks<tables::HookKind::probes>(cfg);
    case tables::HookKind::race: return tables::make_with_hooks<tables::HookKind::race>(cfg);
  }
  throw std::invalid_argument("unknown hook kind");
}

}  // namespace warpbench

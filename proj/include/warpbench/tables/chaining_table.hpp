#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "warpbench/core/config.hpp"
#include "warpbench/sync/lock_array.hpp"
#include "warpbench/tables/bucket_store.hpp"

namespace warpbench::tables {

/// Seven pairs and a link: one 128-byte line.
struct alignas(128) ChainNode {
  Slot pairs[kChainNodePairs];
  ChainNode* next;
};
static_assert(sizeof(ChainNode) == 128);

/// Bump allocator for overflow nodes. Nodes live until the pool is dropped.
class NodePool {
 public:
  static constexpr std::size_t kChunkNodes = 256;

  ChainNode* allocate() {
    std::lock_guard lock(mu_);
    if (!spare_.empty()) {
      ChainNode* n = spare_.back();
      spare_.pop_back();
      return n;
    }
    if (chunks_.empty() || used_ == kChunkNodes) {
      chunks_.emplace_back(kChunkNodes, alignof(ChainNode));
      used_ = 0;
    }
    ++live_;
    return &chunks_.back()[used_++];
  }

  /// Returns a node that was never linked.
  void give_back(ChainNode* n) {
    std::lock_guard lock(mu_);
    *n = ChainNode{};
    spare_.push_back(n);
  }

  [[nodiscard]] std::size_t nodes_handed_out() const {
    std::lock_guard lock(mu_);
    return live_ - spare_.size();
  }
  [[nodiscard]] std::size_t bytes() const {
    std::lock_guard lock(mu_);
    return chunks_.size() * kChunkNodes * sizeof(ChainNode);
  }

 private:
  mutable std::mutex mu_;
  std::vector<AlignedArray<ChainNode>> chunks_;
  std::vector<ChainNode*> spare_;
  std::size_t used_ = 0;
  std::size_t live_ = 0;
};

struct ChainStats {
  std::size_t chains = 0;
  std::size_t nodes = 0;
  std::size_t longest = 0;
  [[nodiscard]] double mean_length() const noexcept {
    return chains ? static_cast<double>(nodes) / static_cast<double>(chains) : 0.0;
  }
};

/// Separate chaining over an array of head nodes. Readers walk the chain
/// without locks; writers hold the head's lock. A node is appended only once
/// every earlier node is full, so a node with an EMPTY slot ends its chain.
template <class Hooks = NullHooks>
class ChainingTable {
 public:
  explicit ChainingTable(const TableConfig& cfg)
      : cfg_(validate_config(cfg)), nb_(cfg_.capacity_slots / kChainNodePairs),
        heads_(nb_, alignof(ChainNode)), locks_(nb_, cfg_.mode) {}

  [[nodiscard]] const TableConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::size_t num_buckets() const noexcept { return nb_; }
  [[nodiscard]] std::size_t num_primary_buckets() const noexcept { return nb_; }
  [[nodiscard]] std::size_t capacity_slots() const noexcept { return cfg_.capacity_slots; }
  [[nodiscard]] std::size_t bytes_allocated() const { return heads_.bytes() + pool_.bytes() + locks_.bytes(); }
  [[nodiscard]] std::size_t lock_bytes() const noexcept { return locks_.bytes(); }

  [[nodiscard]] std::size_t primary_bucket(Key key) const {
    check_key(key);
    return cfg_.seeds.bucket(0, key, nb_);
  }

  template <class Merge>
  UpsertStatus upsert(Key key, Value value, Merge&& merge) {
    const std::size_t b = primary_bucket(key);
    auto guard = lock_bucket<Hooks>(locks_, b);
    Hooks::point(SchedPoint::after_lock);

    ChainNode* first_free_node = nullptr;
    std::size_t first_free = 0;
    ChainNode* tail = &heads_[b];
    for (ChainNode* n = tail; n; n = next(n)) {
      tail = n;
      Hooks::access(n);
      bool saw_empty = false;
      for (std::size_t i = 0; i < kChainNodePairs; ++i) {
        const auto v = sync::snapshot(n->pairs[i], cfg_.mode);
        if (v.state == SlotState::occupied && v.key == key) {
          sync::update_value(n->pairs[i], value, merge, cfg_.mode);
          return UpsertStatus::updated;
        }
        if (!first_free_node && (v.state == SlotState::empty || v.state == SlotState::tombstone)) {
          first_free_node = n;
          first_free = i;
        }
        if (v.state == SlotState::empty) {
          saw_empty = true;
          break;
        }
      }
      if (saw_empty) break;
    }
    Hooks::point(SchedPoint::after_probe);
    Hooks::point(SchedPoint::before_reserve);
    if (first_free_node && claim_in(first_free_node, first_free, key, value)) return UpsertStatus::inserted;

    // Everything seen is full: append (or follow a node another writer linked).
    for (ChainNode* n = tail;;) {
      if (ChainNode* nx = next(n)) {
        n = nx;
        Hooks::access(n);
        if (claim_in(n, 0, key, value)) return UpsertStatus::inserted;
        continue;
      }
      ChainNode* fresh = pool_.allocate();
      (void)sync::try_claim(fresh->pairs[0], kEmptyKey);
      Hooks::access(fresh);
      sync::publish(fresh->pairs[0], key, value, cfg_.mode);
      ChainNode* expected = nullptr;
      if (std::atomic_ref<ChainNode*>(n->next).compare_exchange_strong(expected, fresh, std::memory_order_release,
                                                                       std::memory_order_acquire))
        return UpsertStatus::inserted;
      pool_.give_back(fresh);
    }
  }

  [[nodiscard]] std::optional<Value> query(Key key) const {
    const std::size_t b = primary_bucket(key);
    for (const ChainNode* n = &heads_[b]; n; n = next(n)) {
      Hooks::access(n);
      for (std::size_t i = 0; i < kChainNodePairs; ++i) {
        const auto v = sync::snapshot(n->pairs[i], cfg_.mode);
        if (v.state == SlotState::occupied && v.key == key) return v.value;
        if (v.state == SlotState::empty) return std::nullopt;
      }
    }
    return std::nullopt;
  }

  bool erase(Key key) {
    const std::size_t b = primary_bucket(key);
    auto guard = lock_bucket<Hooks>(locks_, b);
    Hooks::point(SchedPoint::after_lock);
    for (ChainNode* n = &heads_[b]; n; n = next(n)) {
      Hooks::access(n);
      for (std::size_t i = 0; i < kChainNodePairs; ++i) {
        const auto v = sync::snapshot(n->pairs[i], cfg_.mode);
        if (v.state == SlotState::occupied && v.key == key) {
          Hooks::point(SchedPoint::before_tombstone);
          sync::tombstone(n->pairs[i], cfg_.mode);
          return true;
        }
        if (v.state == SlotState::empty) return false;
      }
    }
    return false;
  }

  [[nodiscard]] std::optional<Value> query_untagged(Key key) const { return query(key); }

  [[nodiscard]] const Slot* locate(Key key) const {
    for (const ChainNode* n = &heads_[primary_bucket(key)]; n; n = next(n))
      for (const Slot& s : n->pairs) {
        const auto v = sync::snapshot(s, cfg_.mode);
        if (v.state == SlotState::occupied && v.key == key) return &s;
      }
    return nullptr;
  }

  template <class F>
  void for_each(F&& fn) const {
    for (std::size_t b = 0; b < nb_; ++b)
      for (const ChainNode* n = &heads_[b]; n; n = next(n))
        for (const Slot& s : n->pairs) {
          const auto v = sync::snapshot(s, cfg_.mode);
          if (v.state == SlotState::occupied) fn(v.key, v.value, &s);
        }
  }

  [[nodiscard]] std::size_t chain_length(std::size_t b) const {
    std::size_t len = 0;
    for (const ChainNode* n = &heads_[b]; n; n = next(n)) ++len;
    return len;
  }

  [[nodiscard]] ChainStats chain_stats() const {
    ChainStats s;
    s.chains = nb_;
    for (std::size_t b = 0; b < nb_; ++b) {
      const std::size_t len = chain_length(b);
      s.nodes += len;
      s.longest = std::max(s.longest, len);
    }
    return s;
  }

  [[nodiscard]] std::size_t overflow_nodes() const { return pool_.nodes_handed_out(); }

 private:
  static ChainNode* next(const ChainNode* n) noexcept {
    return std::atomic_ref<ChainNode*>(const_cast<ChainNode*&>(n->next)).load(std::memory_order_acquire);
  }

  bool claim_in(ChainNode* n, std::size_t from, Key key, Value value) {
    for (std::size_t i = from; i < kChainNodePairs; ++i) {
      const Key k = sync::load_key(n->pairs[i], cfg_.mode);
      if ((k == kEmptyKey || k == kTombstoneKey) && sync::try_claim(n->pairs[i], k)) {
        Hooks::point(SchedPoint::before_publish);
        sync::publish(n->pairs[i], key, value, cfg_.mode);
        return true;
      }
    }
    return false;
  }

  TableConfig cfg_;
  std::size_t nb_;
  AlignedArray<ChainNode> heads_;
  mutable sync::LockArray locks_;
  NodePool pool_;
};

}  // namespace warpbench::tables

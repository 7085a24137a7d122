// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "streamkv/common/types.hpp"
#include "streamkv/kv/cell_pool.hpp"

namespace streamkv::pool {

/// Token-keyed radix trie of cached prefixes. Every node owns a donor
/// sequence aliasing the full root-to-node path, so any matched prefix can be
/// restored from one donor without copying cells.
class RadixCache {
 public:
  RadixCache(kv::CellPool& cells, std::int64_t budget_cells);
  ~RadixCache();
  RadixCache(const RadixCache&) = delete;
  RadixCache& operator=(const RadixCache&) = delete;

  struct Match {
    std::size_t length = 0;
    SequenceId donor;  // valid iff length > 0
  };

  /// Longest cached prefix of tokens. Touches every node on the path.
  Match match(std::span<const TokenId> tokens);

  /// Caches tokens whose cells are held by seq at positions 0..n-1. Only the
  /// part beyond the existing branch is newly committed. Returns false when
  /// the insert was skipped for lack of budget.
  bool insert(std::span<const TokenId> tokens, SequenceId seq);

  /// Drops the least recently used leaf. Returns false when empty.
  bool evict_one();
  void clear();

  /// Restores a match into an empty target.
  void restore(const Match& m, SequenceId target);

  std::int64_t committed_cells() const;
  std::int64_t budget_cells() const { return budget_; }
  std::size_t node_count() const;
  std::uint64_t skipped_inserts() const;
  std::uint64_t evictions() const;

 private:
  struct Node {
    Tokens edge;
    std::size_t depth = 0;  // path length including edge
    SequenceId donor;
    std::uint64_t last_use = 0;
    Node* parent = nullptr;
    std::vector<std::unique_ptr<Node>> children;
  };

  Node* child_starting_with(Node* n, TokenId t) const;
  void collect_leaves(Node* n, std::vector<Node*>& out) const;

  kv::CellPool& cells_;
  const std::int64_t budget_;
  const int layers_;
  mutable std::mutex mutex_;
  Node root_;
  std::uint64_t clock_ = 0;
  std::int64_t committed_ = 0;
  std::size_t nodes_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace streamkv::pool

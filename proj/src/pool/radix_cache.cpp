// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/pool/radix_cache.hpp"

#include <algorithm>

namespace streamkv::pool {

RadixCache::RadixCache(kv::CellPool& cells, std::int64_t budget_cells)
    : cells_(cells), budget_(budget_cells), layers_(cells.layers()) {}

RadixCache::~RadixCache() { clear(); }

RadixCache::Node* RadixCache::child_starting_with(Node* n, TokenId t) const {
  for (auto& c : n->children) {
    if (c->edge.front() == t) return c.get();
  }
  return nullptr;
}

RadixCache::Match RadixCache::match(std::span<const TokenId> tokens) {
  std::lock_guard lock(mutex_);
  Match m;
  Node* n = &root_;
  std::size_t i = 0;
  const std::uint64_t now = ++clock_;
  while (i < tokens.size()) {
    Node* c = child_starting_with(n, tokens[i]);
    if (!c) break;
    std::size_t k = 0;
    while (k < c->edge.size() && i + k < tokens.size() && c->edge[k] == tokens[i + k]) ++k;
    c->last_use = now;
    i += k;
    m.length = i;
    m.donor = c->donor;
    if (k < c->edge.size()) break;
    n = c;
  }
  return m;
}

bool RadixCache::insert(std::span<const TokenId> tokens, SequenceId seq) {
  if (tokens.empty()) return true;
  std::lock_guard lock(mutex_);
  const std::uint64_t now = ++clock_;

  // Walk the existing branch.
  Node* n = &root_;
  std::size_t i = 0;
  Node* split_child = nullptr;
  std::size_t split_at = 0;
  while (i < tokens.size()) {
    Node* c = child_starting_with(n, tokens[i]);
    if (!c) break;
    std::size_t k = 0;
    while (k < c->edge.size() && i + k < tokens.size() && c->edge[k] == tokens[i + k]) ++k;
    c->last_use = now;
    if (k < c->edge.size()) {
      split_child = c;
      split_at = k;
      i += k;
      break;
    }
    i += k;
    n = c;
  }
  if (i == tokens.size() && !split_child) return true;  // already cached

  const std::size_t delta = tokens.size() - i;
  const std::int64_t delta_cells = static_cast<std::int64_t>(delta) * layers_;
  if (delta > 0 && committed_ + delta_cells > budget_) {
    ++skipped_;
    return false;
  }

  if (split_child) {
    // Cut the edge at split_at; the upper part becomes a new interior node.
    auto mid = std::make_unique<Node>();
    mid->edge.assign(split_child->edge.begin(), split_child->edge.begin() + static_cast<std::ptrdiff_t>(split_at));
    mid->depth = n->depth + split_at;
    mid->parent = n;
    mid->last_use = now;
    mid->donor = cells_.create_sequence(SequenceKind::kPrefixDonor);
    cells_.alias_prefix(split_child->donor, mid->donor, mid->depth);
    ++nodes_;

    auto it = std::find_if(n->children.begin(), n->children.end(),
                           [&](const std::unique_ptr<Node>& p) { return p.get() == split_child; });
    std::unique_ptr<Node> lower = std::move(*it);
    lower->edge.erase(lower->edge.begin(), lower->edge.begin() + static_cast<std::ptrdiff_t>(split_at));
    lower->parent = mid.get();
    mid->children.push_back(std::move(lower));
    Node* mid_raw = mid.get();
    *it = std::move(mid);
    n = mid_raw;
  }

  if (delta > 0) {
    auto leaf = std::make_unique<Node>();
    leaf->edge.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.end());
    leaf->depth = tokens.size();
    leaf->parent = n;
    leaf->last_use = now;
    leaf->donor = cells_.create_sequence(SequenceKind::kPrefixDonor);
    cells_.alias_prefix(seq, leaf->donor, tokens.size());
    n->children.push_back(std::move(leaf));
    ++nodes_;
    committed_ += delta_cells;
  }
  return true;
}

void RadixCache::collect_leaves(Node* n, std::vector<Node*>& out) const {
  for (auto& c : n->children) {
    if (c->children.empty()) {
      out.push_back(c.get());
    } else {
      collect_leaves(c.get(), out);
    }
  }
}

bool RadixCache::evict_one() {
  std::lock_guard lock(mutex_);
  std::vector<Node*> leaves;
  collect_leaves(&root_, leaves);
  if (leaves.empty()) return false;
  Node* victim = *std::min_element(leaves.begin(), leaves.end(),
                                   [](const Node* a, const Node* b) { return a->last_use < b->last_use; });
  cells_.destroy_sequence(victim->donor);
  committed_ -= static_cast<std::int64_t>(victim->edge.size()) * layers_;
  Node* parent = victim->parent;
  std::erase_if(parent->children, [&](const std::unique_ptr<Node>& p) { return p.get() == victim; });
  --nodes_;
  ++evictions_;
  return true;
}

void RadixCache::clear() {
  while (evict_one()) {
  }
}

void RadixCache::restore(const Match& m, SequenceId target) {
  if (m.length == 0) return;
  std::lock_guard lock(mutex_);
  cells_.alias_prefix(m.donor, target, m.length);
}

std::int64_t RadixCache::committed_cells() const {
  std::lock_guard lock(mutex_);
  return committed_;
}

std::size_t RadixCache::node_count() const {
  std::lock_guard lock(mutex_);
  return nodes_;
}

std::uint64_t RadixCache::skipped_inserts() const {
  std::lock_guard lock(mutex_);
  return skipped_;
}

std::uint64_t RadixCache::evictions() const {
  std::lock_guard lock(mutex_);
  return evictions_;
}

}  // namespace streamkv::pool

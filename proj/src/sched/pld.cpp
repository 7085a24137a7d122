// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/sched/pld.hpp"

#include <algorithm>

namespace streamkv::sched {

Tokens pld_draft(std::span<const TokenId> history, std::size_t max_ngram, std::size_t cap) {
  Tokens out;
  const std::size_t n = history.size();
  if (cap == 0 || n < 2) return out;
  for (std::size_t len = std::min(max_ngram, n - 1); len >= 1; --len) {
    const auto suffix = history.subspan(n - len, len);
    // Most recent earlier occurrence whose continuation exists.
    for (std::size_t start = n - len; start-- > 0;) {
      if (!std::equal(suffix.begin(), suffix.end(), history.begin() + static_cast<std::ptrdiff_t>(start))) continue;
      const std::size_t from = start + len;
      const std::size_t take = std::min(cap, n - from);
      out.assign(history.begin() + static_cast<std::ptrdiff_t>(from),
                 history.begin() + static_cast<std::ptrdiff_t>(from + take));
      return out;
    }
  }
  return out;
}

VerifyResult verify_drafts(model::Transformer& model, kv::CellPool& pool, SequenceId seq, Position pos,
                           TokenId current, std::span<const TokenId> drafts, Priority cause) {
  Tokens batch;
  batch.reserve(drafts.size() + 1);
  batch.push_back(current);
  batch.insert(batch.end(), drafts.begin(), drafts.end());
  auto logits = model.forward_all(pool, {batch, seq, pos, cause, RegionTag::kEphemeral, true});

  VerifyResult r;
  while (r.accepted < drafts.size() && model::greedy_sample(logits[r.accepted]).token == drafts[r.accepted]) {
    ++r.accepted;
  }
  if (r.accepted < drafts.size()) pool.seq_remove(seq, pos + 1 + static_cast<Position>(r.accepted));
  r.next = std::move(logits[r.accepted]);
  return r;
}

}  // namespace streamkv::sched

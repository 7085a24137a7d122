// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "streamkv/common/types.hpp"
#include "streamkv/kv/cell_pool.hpp"
#include "streamkv/model/transformer.hpp"

namespace streamkv::sched {

/// Prompt-lookup draft: find the longest suffix n-gram (n <= max_ngram) of
/// history that also occurs earlier, and propose the tokens that followed its
/// most recent earlier occurrence, at most cap of them.
Tokens pld_draft(std::span<const TokenId> history, std::size_t max_ngram, std::size_t cap);

struct VerifyResult {
  std::size_t accepted = 0;
  // Logits after the last kept token; the next greedy token comes from here.
  model::Logits next;
};

/// Forwards [current, drafts...] at pos in one call, keeps the longest draft
/// prefix agreeing with greedy decoding and removes the rest. `current` is
/// always kept. On a forward error nothing from this call remains cached.
VerifyResult verify_drafts(model::Transformer& model, kv::CellPool& pool, SequenceId seq, Position pos,
                           TokenId current, std::span<const TokenId> drafts, Priority cause);

/// Exponential moving average update of a slot's acceptance rate.
inline double update_acceptance(double ema, std::size_t accepted, std::size_t proposed, double alpha) {
  if (proposed == 0) return ema;
  return (1.0 - alpha) * ema + alpha * (static_cast<double>(accepted) / static_cast<double>(proposed));
}

}  // namespace streamkv::sched

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamkv/common/types.hpp"
#include "streamkv/kv/cell_pool.hpp"

namespace streamkv::sched {

struct PlannerConfig {
  std::size_t n_batch = 1024;
  std::size_t chunk_min = 128;
  std::size_t chunk_max = 1024;
  double high_water = 0.95;     // occupancy fraction that defers prefill
  std::size_t group_window = 8;  // tokens hashed for grouped prefill
  // Draft-length caps by number of decoding slots.
  std::size_t cap_small_n = 2;
  std::size_t cap_small = 8;
  std::size_t cap_mid_n = 8;
  std::size_t cap_mid = 4;
  std::size_t cap_large = 0;
  double ema_floor = 0.3;
  double ema_alpha = 0.1;
  std::size_t max_ngram = 3;
};

/// clamp(n_batch / n_prefilling, lo, hi). n_prefilling must be >= 1.
std::size_t chunk_size(std::size_t n_batch, std::size_t n_prefilling, std::size_t lo = 128, std::size_t hi = 1024);

struct AdmissionCandidate {
  std::int64_t id = 0;
  std::size_t prompt_tokens = 0;
  std::size_t max_tokens = 0;
};

struct AdmissionResult {
  std::vector<std::int64_t> admitted;
  std::vector<std::int64_t> oversized;  // can never fit the budget on their own
  std::int64_t projected_cells = 0;      // committed + admitted
};

/// Cells a request may occupy at most.
inline std::int64_t projected_cells(std::size_t prompt, std::size_t max_tokens, int layers) {
  return static_cast<std::int64_t>(prompt + max_tokens) * layers;
}

/// Admits candidates in arrival order while committed + projected cells stay
/// within budget. Stops at the first one that does not fit so later arrivals
/// cannot overtake it. Candidates that exceed the budget alone are reported
/// as oversized and skipped.
AdmissionResult admit(std::span<const AdmissionCandidate> pending, std::int64_t committed_cells, int layers,
                      std::int64_t budget_cells);

/// FNV-1a over up to `window` tokens starting at `from`, 4-byte little-endian.
std::uint64_t group_key(std::span<const TokenId> tokens, std::size_t from, std::size_t window = 8);

/// Draft length allowed for a slot given the number of decoding slots and
/// the slot's acceptance average.
std::size_t draft_cap(const PlannerConfig& cfg, std::size_t n_active, double acceptance_ema);

/// Occupancy at or above the high-water mark.
bool above_high_water(const kv::Occupancy& occ, double high_water);

struct SlotView {
  std::int64_t id = 0;
  std::span<const TokenId> prompt;
  std::size_t cursor = 0;  // prompt tokens already in the cache
  bool decoding = false;
  double acceptance_ema = 1.0;
};

struct PrefillChunk {
  std::int64_t slot = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct PrefillGroup {
  std::uint64_t key = 0;
  std::int64_t leader = 0;
  std::vector<std::int64_t> followers;
};

struct IterationPlan {
  std::vector<PrefillChunk> chunks;
  std::vector<PrefillGroup> groups;
  std::vector<std::int64_t> decode;
  std::vector<std::size_t> draft_caps;  // parallel to decode
  bool prefill_deferred = false;
  std::size_t chunk = 0;
};

/// Builds one iteration. Slots with nothing cached yet and byte-identical
/// next-window tokens form a group: only the leader gets a chunk, followers
/// take the leader's prefix by aliasing. Prefill is skipped entirely above the
/// high-water mark; decodes are always planned.
IterationPlan plan_iteration(std::span<const SlotView> slots, const kv::Occupancy& occ, const PlannerConfig& cfg,
                             bool grouping = true);

}  // namespace streamkv::sched

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "streamkv/flash/flash_registry.hpp"
#include "streamkv/runtime.hpp"

namespace streamkv::flash {

struct EvalTarget {
  SequenceId seq;
  Position header_pos = 0;        // where the pre-decoded header starts
  std::span<const TokenId> header;
  std::uint64_t version = 0;
};

struct EvalResult {
  std::vector<FlashCacheEntry> entries;
  std::optional<model::Logits> ready;  // logits after the restored header
};

/// Answers every question against the current context in place: strip the
/// header, then for each question forward it at the header position, take
/// the greedy token and clear it again; finally re-decode the header. All
/// model work is charged to FLASH. The sequence ends byte-identical to how it
/// started. With no questions nothing runs.
///
/// on_entry fires once per answered question, in order. If a forward fails
/// the question range is cleared and the header restored before rethrowing.
EvalResult evaluate_all(Runtime& rt, const EvalTarget& target, std::span<const FlashQuery> questions,
                        const std::function<void(const FlashCacheEntry&)>& on_entry = {});

}  // namespace streamkv::flash

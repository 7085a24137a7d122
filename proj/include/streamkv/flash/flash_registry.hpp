// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamkv/common/types.hpp"
#include "streamkv/model/tokenizer.hpp"

namespace streamkv::flash {

using FlashId = std::int32_t;

struct FlashQuery {
  FlashId id = -1;
  std::string question;
  Tokens tokens;
  std::uint64_t hash = 0;
};

struct FlashCacheEntry {
  FlashId id = -1;
  std::string question;
  TokenId answer = 0;
  std::string answer_text;
  float gap = 0.0f;
  std::uint64_t version = 0;
  std::chrono::system_clock::time_point evaluated_at;
};

/// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
std::string normalize_question(std::string_view q);
std::uint64_t question_hash(std::string_view q);

/// Registered questions of one session plus their latest answers.
class FlashRegistry {
 public:
  explicit FlashRegistry(std::size_t cap = 64) : cap_(cap) {}

  struct Registration {
    FlashId id;
    bool created;
  };

  /// Duplicates (after normalization) coalesce onto the existing id.
  /// Throws kInvalidArgument for blank questions and kRegistryFull at the cap.
  Registration add(std::string_view question, const model::Tokenizer& tokenizer);

  /// Questions in registration order.
  std::vector<FlashQuery> queries() const;
  std::optional<FlashQuery> query(FlashId id) const;

  /// Entry for q only if it was produced at `version`.
  std::optional<FlashCacheEntry> lookup(std::string_view q, std::uint64_t version) const;
  void store(const FlashCacheEntry& entry);
  std::vector<FlashCacheEntry> entries() const;

  std::size_t size() const;
  std::size_t cap() const { return cap_; }

 private:
  const std::size_t cap_;
  mutable std::mutex mutex_;
  std::vector<FlashQuery> queries_;
  std::unordered_map<std::uint64_t, std::vector<FlashId>> by_hash_;
  std::unordered_map<FlashId, FlashCacheEntry> answers_;
  std::unordered_map<FlashId, std::string> normalized_;

  std::optional<FlashId> find_locked(std::uint64_t hash, const std::string& norm) const;
};

/// Largest number of questions evaluable per data interval:
/// floor((t_data - t_ingest - t_header) / t_f), never negative.
std::int64_t k_max(std::chrono::nanoseconds t_data, std::chrono::nanoseconds t_ingest,
                   std::chrono::nanoseconds t_header, std::chrono::nanoseconds t_f);

}  // namespace streamkv::flash

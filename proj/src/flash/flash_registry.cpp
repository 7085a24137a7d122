// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/flash/flash_registry.hpp"

#include <cctype>

#include "streamkv/common/error.hpp"
#include "streamkv/common/hash.hpp"

namespace streamkv::flash {

std::string normalize_question(std::string_view q) {
  std::string out;
  out.reserve(q.size());
  bool pending_space = false;
  for (const char ch : q) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::uint64_t question_hash(std::string_view q) { return fnv1a(normalize_question(q)); }

std::optional<FlashId> FlashRegistry::find_locked(std::uint64_t hash, const std::string& norm) const {
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) return std::nullopt;
  for (const FlashId id : it->second) {
    if (normalized_.at(id) == norm) return id;
  }
  return std::nullopt;
}

FlashRegistry::Registration FlashRegistry::add(std::string_view question, const model::Tokenizer& tokenizer) {
  std::string norm = normalize_question(question);
  if (norm.empty()) throw Error(ErrorCode::kInvalidArgument, "flash question is empty");
  const std::uint64_t hash = fnv1a(norm);
  std::lock_guard lock(mutex_);
  if (auto existing = find_locked(hash, norm)) return {*existing, false};
  if (queries_.size() >= cap_) {
    throw Error(ErrorCode::kRegistryFull, "flash registry holds " + std::to_string(cap_) + " questions");
  }
  FlashQuery fq;
  fq.id = static_cast<FlashId>(queries_.size());
  fq.question = std::string(question);
  fq.tokens = tokenizer.tokenize(question);
  fq.hash = hash;
  by_hash_[hash].push_back(fq.id);
  normalized_[fq.id] = std::move(norm);
  queries_.push_back(std::move(fq));
  return {queries_.back().id, true};
}

std::vector<FlashQuery> FlashRegistry::queries() const {
  std::lock_guard lock(mutex_);
  return queries_;
}

std::optional<FlashQuery> FlashRegistry::query(FlashId id) const {
  std::lock_guard lock(mutex_);
  if (id < 0 || static_cast<std::size_t>(id) >= queries_.size()) return std::nullopt;
  return queries_[static_cast<std::size_t>(id)];
}

std::optional<FlashCacheEntry> FlashRegistry::lookup(std::string_view q, std::uint64_t version) const {
  const std::string norm = normalize_question(q);
  const std::uint64_t hash = fnv1a(norm);
  std::lock_guard lock(mutex_);
  const auto id = find_locked(hash, norm);
  if (!id) return std::nullopt;
  auto it = answers_.find(*id);
  if (it == answers_.end() || it->second.version != version) return std::nullopt;
  return it->second;
}

void FlashRegistry::store(const FlashCacheEntry& entry) {
  std::lock_guard lock(mutex_);
  answers_[entry.id] = entry;
}

std::vector<FlashCacheEntry> FlashRegistry::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<FlashCacheEntry> out;
  for (const auto& q : queries_) {
    if (auto it = answers_.find(q.id); it != answers_.end()) out.push_back(it->second);
  }
  return out;
}

std::size_t FlashRegistry::size() const {
  std::lock_guard lock(mutex_);
  return queries_.size();
}

std::int64_t k_max(std::chrono::nanoseconds t_data, std::chrono::nanoseconds t_ingest,
                   std::chrono::nanoseconds t_header, std::chrono::nanoseconds t_f) {
  if (t_f.count() <= 0) throw Error(ErrorCode::kInvalidArgument, "per-question time must be positive");
  const auto spare = t_data - t_ingest - t_header;
  if (spare.count() <= 0) return 0;
  return spare.count() / t_f.count();
}

}  // namespace streamkv::flash

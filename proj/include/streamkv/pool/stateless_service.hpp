// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "streamkv/pool/lru_cache.hpp"
#include "streamkv/pool/radix_cache.hpp"
#include "streamkv/runtime.hpp"
#include "streamkv/sched/batch_engine.hpp"

namespace streamkv::pool {

/// FNV-1a 64 over the tokens (4-byte little-endian), reduced mod 2^32.
std::uint32_t derive_seed(std::span<const TokenId> prompt);

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

/// Minimal chat template: one "ROLE: content" line per message followed by
/// the assistant marker.
std::string render_chat(const std::vector<ChatMessage>& messages);

struct StatelessConfig {
  std::size_t response_cache = 1024;
  std::size_t render_cache = 256;
  std::size_t tokenize_cache = 64;
  bool use_response_cache = true;
  bool use_prefix_cache = true;
  std::int64_t prefix_cache_cells = -1;  // -1: a quarter of the pool
  sched::EngineConfig engine;
};

struct CompletionResult {
  std::string text;
  Tokens tokens;
  std::uint32_t seed = 0;
  bool cache_hit = false;
  std::size_t prompt_tokens = 0;
  std::size_t prefill_tokens = 0;
  std::size_t restored_tokens = 0;
};

struct ResponseEntry {
  Tokens prompt;  // exact key check behind the hash
  std::size_t max_tokens = 0;
  std::string text;
  Tokens tokens;
  std::uint32_t seed = 0;
};

/// Stateless completions: response cache, then the batching engine with
/// radix prefix restore. Never touches session sequences.
class StatelessService {
 public:
  StatelessService(Runtime& rt, StatelessConfig config);
  ~StatelessService();

  CompletionResult complete(const std::string& prompt, std::size_t max_tokens);
  CompletionResult complete_tokens(const Tokens& prompt, std::size_t max_tokens);
  CompletionResult chat(const std::vector<ChatMessage>& messages, std::size_t max_tokens);

  sched::BatchEngine& engine() { return *engine_; }
  RadixCache* prefix_cache() { return radix_.get(); }
  const StatelessConfig& config() const { return config_; }

  struct CacheStats {
    std::size_t size;
    std::size_t capacity;
    std::uint64_t hits;
    std::uint64_t misses;
  };
  CacheStats response_stats() const;
  CacheStats render_stats() const;
  CacheStats tokenize_stats() const;

 private:
  Tokens tokenize_cached(const std::string& text);

  Runtime& rt_;
  StatelessConfig config_;
  std::unique_ptr<RadixCache> radix_;
  std::unique_ptr<sched::BatchEngine> engine_;
  LruCache<std::uint64_t, ResponseEntry> responses_;
  LruCache<std::uint64_t, std::pair<std::string, std::string>> renders_;  // key -> (input, output)
  LruCache<std::uint64_t, std::pair<std::string, Tokens>> tokenized_;
};

}  // namespace streamkv::pool

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/pool/stateless_service.hpp"

#include <algorithm>
#include <cctype>

#include "streamkv/common/hash.hpp"

namespace streamkv::pool {

std::uint32_t derive_seed(std::span<const TokenId> prompt) {
  return static_cast<std::uint32_t>(fnv1a_tokens(prompt) & 0xffffffffULL);
}

std::string render_chat(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) {
    std::string role = m.role;
    std::transform(role.begin(), role.end(), role.begin(), [](unsigned char c) { return std::toupper(c); });
    out += role + ": " + m.content + "\n";
  }
  out += "ASSISTANT:";
  return out;
}

namespace {
constexpr std::uint64_t kChatTemplateId = 1;
}

StatelessService::StatelessService(Runtime& rt, StatelessConfig config)
    : rt_(rt),
      config_(config),
      responses_(config.response_cache),
      renders_(config.render_cache),
      tokenized_(config.tokenize_cache) {
  if (config_.use_prefix_cache) {
    const std::int64_t budget = config_.prefix_cache_cells >= 0 ? config_.prefix_cache_cells
                                                                : rt_.config().capacity_cells / 4;
    radix_ = std::make_unique<RadixCache>(rt_.pool, budget);
  }
  engine_ = std::make_unique<sched::BatchEngine>(rt_, config_.engine, radix_.get());
}

StatelessService::~StatelessService() {
  engine_.reset();
  radix_.reset();
}

Tokens StatelessService::tokenize_cached(const std::string& text) {
  const std::uint64_t key = fnv1a(text);
  if (auto hit = tokenized_.get(key); hit && hit->first == text) return hit->second;
  Tokens t = rt_.tokenizer.tokenize(text);
  tokenized_.put(key, {text, t});
  return t;
}

CompletionResult StatelessService::complete(const std::string& prompt, std::size_t max_tokens) {
  return complete_tokens(tokenize_cached(prompt), max_tokens);
}

CompletionResult StatelessService::complete_tokens(const Tokens& prompt, std::size_t max_tokens) {
  CompletionResult r;
  r.prompt_tokens = prompt.size();
  r.seed = derive_seed(prompt);

  Fnv1a h;
  for (const TokenId t : prompt) h.update_u32(static_cast<std::uint32_t>(t));
  h.update_u64(max_tokens);
  const std::uint64_t key = h.value();
  if (config_.use_response_cache) {
    if (auto hit = responses_.get(key); hit && hit->prompt == prompt && hit->max_tokens == max_tokens) {
      r.text = hit->text;
      r.tokens = hit->tokens;
      r.seed = hit->seed;
      r.cache_hit = true;
      return r;
    }
  }

  // Greedy decoding: the seed is recorded with the response but does not
  // change which token wins.
  const sched::Completion c = engine_->generate(prompt, max_tokens);
  r.tokens = c.tokens;
  r.text = rt_.tokenizer.detokenize(c.tokens);
  r.prefill_tokens = c.prefill_tokens;
  r.restored_tokens = c.restored_tokens;
  if (config_.use_response_cache) responses_.put(key, {prompt, max_tokens, r.text, r.tokens, r.seed});
  return r;
}

CompletionResult StatelessService::chat(const std::vector<ChatMessage>& messages, std::size_t max_tokens) {
  Fnv1a h;
  h.update_u64(kChatTemplateId);
  std::string flat;
  for (const auto& m : messages) {
    flat += m.role;
    flat.push_back('\0');
    flat += m.content;
    flat.push_back('\0');
  }
  h.update(flat.data(), flat.size());
  const std::uint64_t key = h.value();
  std::string rendered;
  if (auto hit = renders_.get(key); hit && hit->first == flat) {
    rendered = hit->second;
  } else {
    rendered = render_chat(messages);
    renders_.put(key, {flat, rendered});
  }
  return complete(rendered, max_tokens);
}

StatelessService::CacheStats StatelessService::response_stats() const {
  return {responses_.size(), responses_.capacity(), responses_.hits(), responses_.misses()};
}
StatelessService::CacheStats StatelessService::render_stats() const {
  return {renders_.size(), renders_.capacity(), renders_.hits(), renders_.misses()};
}
StatelessService::CacheStats StatelessService::tokenize_stats() const {
  return {tokenized_.size(), tokenized_.capacity(), tokenized_.hits(), tokenized_.misses()};
}

}  // namespace streamkv::pool

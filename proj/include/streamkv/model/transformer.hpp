// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <span>
#include <vector>

#include "streamkv/common/types.hpp"
#include "streamkv/kv/cell_pool.hpp"
#include "streamkv/model/config.hpp"
#include "streamkv/model/weights.hpp"

namespace streamkv::model {

struct Logits {
  std::vector<float> values;
  Position position = -1;
};

struct SampleResult {
  TokenId token = 0;
  float gap = 0.0f;  // top-1 minus top-2 score
};

/// Greedy argmax; ties go to the lowest token id.
SampleResult greedy_sample(std::span<const float> logits);
inline SampleResult greedy_sample(const Logits& logits) { return greedy_sample(logits.values); }

/// Tokens forwarded, split by cause and by prefill/decode.
class ForwardStats {
 public:
  struct Snapshot {
    std::array<std::uint64_t, kNumPriorities> prefill{};
    std::array<std::uint64_t, kNumPriorities> decode{};
    std::uint64_t total(Priority p) const {
      return prefill[static_cast<std::size_t>(p)] + decode[static_cast<std::size_t>(p)];
    }
    std::uint64_t total() const;
  };

  void add(Priority cause, bool decode, std::uint64_t n) {
    auto& arr = decode ? decode_ : prefill_;
    arr[static_cast<std::size_t>(cause)].fetch_add(n, std::memory_order_relaxed);
  }
  Snapshot snapshot() const;

 private:
  std::array<std::atomic<std::uint64_t>, kNumPriorities> prefill_{};
  std::array<std::atomic<std::uint64_t>, kNumPriorities> decode_{};
};

struct ForwardArgs {
  std::span<const TokenId> tokens;
  SequenceId seq;
  Position start_pos = 0;
  Priority cause = Priority::kSession;
  RegionTag region = RegionTag::kSliding;
  bool decode = false;  // accounting only
};

/// Deterministic toy decoder: sinusoidal absolute positions, RMS-normed
/// pre-norm blocks with causal multi-head attention and a ReLU MLP.
///
/// Each token is computed with the same floating point operation sequence
/// regardless of how the input is split across calls, so chunked and
/// one-shot forwards over the same history produce bit-identical cells.
class Transformer {
 public:
  explicit Transformer(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }
  ForwardStats& stats() { return stats_; }
  const ForwardStats& stats() const { return stats_; }

  /// Appends one K/V cell per token per layer and returns logits at the last
  /// token. Attention at each new token covers every cached position of the
  /// sequence not greater than its own.
  Logits forward(kv::CellPool& pool, const ForwardArgs& args);

  /// Same as forward, returning logits at every new token.
  std::vector<Logits> forward_all(kv::CellPool& pool, const ForwardArgs& args);

  /// Stateless reference: logits at every position of `tokens` placed at
  /// positions 0..n-1, recomputed from scratch in double precision.
  std::vector<Logits> full_forward_oracle(std::span<const TokenId> tokens) const;

  /// Logits from a final hidden state (used by both paths).
  void unembed(std::span<const float> hidden, std::span<float> out) const;

 private:
  std::vector<Logits> run(kv::CellPool& pool, const ForwardArgs& args, bool all_logits);

  ModelConfig config_;
  Weights weights_;
  ForwardStats stats_;
};

/// Sinusoidal positional encoding value for (position, dimension).
double positional_encoding(Position pos, int dim, int model_dim);

/// max |a - b| / max |b|; the cross-path comparison metric.
double relative_error(std::span<const float> a, std::span<const float> b);

}  // namespace streamkv::model

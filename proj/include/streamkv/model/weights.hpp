// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "streamkv/model/config.hpp"

namespace streamkv::model {

/// xorshift64* generator; the weight stream is defined in terms of it.
class XorShift64Star {
 public:
  explicit XorShift64Star(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [lo, hi) from the top 24 bits.
  float uniform(float lo, float hi) {
    const float u = static_cast<float>(next() >> 40) * (1.0f / 16777216.0f);
    return lo + (hi - lo) * u;
  }

 private:
  std::uint64_t state_;
};

struct LayerWeights {
  std::vector<float> wq, wk, wv, wo;  // [d][d], row-major (out, in)
  std::vector<float> w1;              // [hidden][d]
  std::vector<float> w2;              // [d][hidden]
};

/// Weight set drawn uniform in [-0.1, 0.1] in this order: embedding
/// [vocab][d], then per layer wq, wk, wv, wo, w1, w2, then unembedding
/// [vocab][d]. Same seed gives bit-identical weights.
struct Weights {
  std::vector<float> embedding;
  std::vector<LayerWeights> layers;
  std::vector<float> unembedding;

  static Weights generate(const ModelConfig& config);
};

}  // namespace streamkv::model

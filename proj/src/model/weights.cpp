// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/model/weights.hpp"

#include <string>

#include "streamkv/model/tokenizer.hpp"

namespace streamkv::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, "model config: " + what); };
  if (layers < 1) fail("layers must be >= 1");
  if (heads < 1 || head_dim < 1) fail("heads and head_dim must be >= 1");
  if (model_dim != heads * head_dim) fail("model_dim must equal heads * head_dim");
  if (vocab_size < vocab::kMinVocab) fail("vocab_size below reserved vocabulary size");
  if (max_positions < 1) fail("max_positions must be >= 1");
  if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
}

namespace {

std::vector<float> draw(XorShift64Star& rng, std::size_t n) {
  std::vector<float> out(n);
  for (auto& w : out) w = rng.uniform(-0.1f, 0.1f);
  return out;
}

}  // namespace

Weights Weights::generate(const ModelConfig& config) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.model_dim);
  const auto hidden = d * static_cast<std::size_t>(config.mlp_ratio);
  const auto vocab = static_cast<std::size_t>(config.vocab_size);

  XorShift64Star rng(config.weight_seed);
  Weights w;
  w.embedding = draw(rng, vocab * d);
  w.layers.reserve(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    LayerWeights lw;
    lw.wq = draw(rng, d * d);
    lw.wk = draw(rng, d * d);
    lw.wv = draw(rng, d * d);
    lw.wo = draw(rng, d * d);
    lw.w1 = draw(rng, hidden * d);
    lw.w2 = draw(rng, d * hidden);
    w.layers.push_back(std::move(lw));
  }
  w.unembedding = draw(rng, vocab * d);
  return w;
}

}  // namespace streamkv::model

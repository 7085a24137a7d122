// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "streamkv/common/error.hpp"

namespace streamkv::model {

struct ModelConfig {
  int layers = 4;
  int model_dim = 64;
  int heads = 4;
  int head_dim = 16;
  int vocab_size = 512;
  std::uint64_t weight_seed = 0x5eed5eed5eedULL;
  int max_positions = 32768;
  // Hidden width of the per-layer MLP, in multiples of model_dim.
  int mlp_ratio = 2;

  void validate() const;
};

}  // namespace streamkv::model

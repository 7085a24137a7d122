// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include "streamkv/kv/cell_pool.hpp"
#include "streamkv/model/tokenizer.hpp"
#include "streamkv/model/transformer.hpp"
#include "streamkv/pool/sequence_pool.hpp"
#include "streamkv/sched/dispatcher.hpp"

namespace streamkv {

struct RuntimeConfig {
  model::ModelConfig model;
  std::int64_t capacity_cells = 1 << 20;
  std::size_t transient_slots = 16;
  std::size_t session_slots = 16;
};

/// Shared engine state: weights, tokenizer, the cell pool, the sequence id
/// pool and the single dispatch worker. All model work goes through forward()
/// and remove(), which run as one dispatcher batch each.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig config = {})
      : config_(config),
        model(config.model),
        tokenizer(config.model.vocab_size),
        pool(config.model.layers, config.model.model_dim, config.capacity_cells),
        sequences(pool, config.transient_slots, config.session_slots) {}
  ~Runtime() { dispatcher.shutdown(); }

  const RuntimeConfig& config() const { return config_; }
  int layers() const { return config_.model.layers; }

  /// Cells available to admitted stateless work: half the pool.
  std::int64_t transient_budget() const { return config_.capacity_cells / 2; }
  /// Cells that sessions may reserve: the other half.
  std::int64_t session_budget() const { return config_.capacity_cells - transient_budget(); }

  model::Logits forward(Priority priority, const char* label, const model::ForwardArgs& args) {
    return dispatcher.run(priority, label, [&] { return model.forward(pool, args); });
  }
  std::vector<model::Logits> forward_all(Priority priority, const char* label, const model::ForwardArgs& args) {
    return dispatcher.run(priority, label, [&] { return model.forward_all(pool, args); });
  }
  std::size_t remove(Priority priority, SequenceId seq, Position from) {
    return dispatcher.run(priority, "seq_remove", [&] { return pool.seq_remove(seq, from); });
  }

  /// Session quota bookkeeping in cells. Returns false when the reservation
  /// would exceed session_budget().
  bool reserve_session_cells(std::int64_t cells) {
    std::int64_t cur = session_reserved_.load();
    do {
      if (cur + cells > session_budget()) return false;
    } while (!session_reserved_.compare_exchange_weak(cur, cur + cells));
    return true;
  }
  void release_session_cells(std::int64_t cells) { session_reserved_.fetch_sub(cells); }
  std::int64_t session_reserved_cells() const { return session_reserved_.load(); }

 private:
  RuntimeConfig config_;

 public:
  model::Transformer model;
  model::Tokenizer tokenizer;
  kv::CellPool pool;
  pool::SequencePool sequences;
  sched::Dispatcher dispatcher;

 private:
  std::atomic<std::int64_t> session_reserved_{0};
};

}  // namespace streamkv

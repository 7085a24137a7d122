// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <vector>

#include "streamkv/common/types.hpp"
#include "streamkv/kv/cell_pool.hpp"

namespace streamkv::pool {

/// Fixed sets of transient and session sequence ids. Acquisition blocks up to
/// a deadline and waiters are served in arrival order. Released slots are
/// cleared before reuse.
class SequencePool {
 public:
  SequencePool(kv::CellPool& cells, std::size_t transient, std::size_t sessions);
  SequencePool(const SequencePool&) = delete;
  SequencePool& operator=(const SequencePool&) = delete;

  /// Throws kTimeout when no slot of `kind` frees up before the deadline.
  SequenceId acquire(SequenceKind kind, std::chrono::milliseconds timeout);
  void release(SequenceId id);

  std::size_t free_count(SequenceKind kind) const;
  std::size_t capacity(SequenceKind kind) const;
  std::size_t waiting(SequenceKind kind) const;

 private:
  struct Lane {
    std::vector<SequenceId> free;
    std::deque<std::uint64_t> waiters;  // tickets
    std::size_t capacity = 0;
  };
  Lane& lane(SequenceKind kind);
  const Lane& lane(SequenceKind kind) const;

  kv::CellPool& cells_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  Lane transient_;
  Lane sessions_;
  std::uint64_t next_ticket_ = 0;
};

}  // namespace streamkv::pool

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "streamkv/common/error.hpp"
#include "streamkv/common/types.hpp"

namespace streamkv::kv {

using CellIndex = std::int32_t;

/// Bytes of keys and values for one context: 2 * layers * dim * tokens * dtype.
constexpr std::uint64_t kv_bytes_model(std::uint64_t layers, std::uint64_t model_dim, std::uint64_t context_tokens,
                                       std::uint64_t dtype_bytes) {
  return 2 * layers * model_dim * context_tokens * dtype_bytes;
}

struct Occupancy {
  std::int64_t used_cells = 0;
  std::int64_t capacity_cells = 0;
};

/// Token-ordered index of one sequence. Entry i owns `layers` cells stored at
/// cells[i * layers + l].
struct SequenceIndex {
  SequenceKind kind = SequenceKind::kTransient;
  std::vector<Position> positions;
  std::vector<RegionTag> regions;
  std::vector<CellIndex> cells;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

/// Unified K/V cell pool. One cell holds the key and value vectors of one
/// token in one layer. Cells are reference counted so a prefix can be shared
/// between sequences without copying payload.
///
/// All standalone methods lock internally. Model forwards take a WriteTxn,
/// which holds the pool lock for the duration of the forward so snapshot
/// readers (occupancy, digest) never observe a half-written token.
class CellPool {
 public:
  CellPool(int layers, int model_dim, std::int64_t capacity_cells);
  CellPool(const CellPool&) = delete;
  CellPool& operator=(const CellPool&) = delete;

  int layers() const { return layers_; }
  int model_dim() const { return dim_; }

  SequenceId create_sequence(SequenceKind kind);
  void destroy_sequence(SequenceId seq);
  bool contains(SequenceId seq) const;

  /// Frees every cell of `seq` at position >= from_pos. Returns the number
  /// of token entries removed.
  std::size_t seq_remove(SequenceId seq, Position from_pos);

  /// Frees the n lowest-position SLIDING tokens. FROZEN tokens are never
  /// touched and remaining positions are not re-based.
  std::vector<Position> evict_oldest(SequenceId seq, std::size_t n_tokens);

  /// Shares the donor's first len_tokens entries with an empty target.
  /// Only index entries and reference counts are touched.
  void alias_prefix(SequenceId donor, SequenceId target, std::size_t len_tokens);

  Occupancy occupancy() const;
  std::uint64_t digest(SequenceId seq) const;

  std::size_t token_count(SequenceId seq) const;
  std::size_t region_count(SequenceId seq, RegionTag tag) const;
  Position last_position(SequenceId seq) const;  // -1 when empty
  std::vector<Position> positions(SequenceId seq) const;
  std::vector<CellIndex> cells(SequenceId seq) const;
  std::uint32_t ref_count(CellIndex cell) const;

  /// K/V payload bytes addressed by the sequence (2 * layers * dim * tokens * 4).
  std::int64_t kv_bytes(SequenceId seq) const;

  class WriteTxn {
   public:
    explicit WriteTxn(CellPool& pool) : pool_(pool), lock_(pool.mutex_) {}

    /// Appends n entries at consecutive positions from start_pos and returns
    /// the index of the first one. Fails atomically when the pool cannot host
    /// n * layers new cells.
    std::size_t append_tokens(SequenceId seq, Position start_pos, std::size_t n, RegionTag region);

    const SequenceIndex& sequence(SequenceId seq) const { return pool_.find_locked(seq); }
    float* key(CellIndex cell) { return pool_.payload(cell); }
    float* value(CellIndex cell) { return pool_.payload(cell) + pool_.dim_; }
    const float* key(CellIndex cell) const { return pool_.payload(cell); }
    const float* value(CellIndex cell) const { return pool_.payload(cell) + pool_.dim_; }

   private:
    CellPool& pool_;
    std::unique_lock<std::mutex> lock_;
  };

  WriteTxn begin_write() { return WriteTxn(*this); }

 private:
  static constexpr std::int64_t kBlockCells = 4096;

  SequenceIndex& find_locked(SequenceId seq);
  const SequenceIndex& find_locked(SequenceId seq) const;
  CellIndex allocate_locked();
  void release_locked(CellIndex cell);
  void truncate_locked(SequenceIndex& s, std::size_t keep);
  float* payload(CellIndex cell) const {
    const auto block = static_cast<std::size_t>(cell / kBlockCells);
    const auto offset = static_cast<std::size_t>(cell % kBlockCells);
    return blocks_[block].get() + offset * static_cast<std::size_t>(2 * dim_);
  }

  const int layers_;
  const int dim_;
  const std::int64_t capacity_;

  mutable std::mutex mutex_;
  std::vector<std::unique_ptr<float[]>> blocks_;
  std::vector<std::uint32_t> refs_;
  std::vector<CellIndex> free_;
  std::int64_t used_ = 0;
  std::int32_t next_seq_id_ = 0;
  std::unordered_map<std::int32_t, SequenceIndex> sequences_;
};

}  // namespace streamkv::kv

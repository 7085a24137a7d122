// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/kv/cell_pool.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "streamkv/common/hash.hpp"

namespace streamkv::kv {

CellPool::CellPool(int layers, int model_dim, std::int64_t capacity_cells)
    : layers_(layers), dim_(model_dim), capacity_(capacity_cells) {
  if (layers < 1 || model_dim < 1 || capacity_cells < 0 || capacity_cells > INT32_MAX) {
    throw Error(ErrorCode::kInvalidArgument, "cell pool: bad shape");
  }
}

SequenceIndex& CellPool::find_locked(SequenceId seq) {
  auto it = sequences_.find(seq.id);
  if (it == sequences_.end()) throw Error(ErrorCode::kUnknownSequence, "unknown sequence " + std::to_string(seq.id));
  return it->second;
}

const SequenceIndex& CellPool::find_locked(SequenceId seq) const {
  auto it = sequences_.find(seq.id);
  if (it == sequences_.end()) throw Error(ErrorCode::kUnknownSequence, "unknown sequence " + std::to_string(seq.id));
  return it->second;
}

SequenceId CellPool::create_sequence(SequenceKind kind) {
  std::lock_guard lock(mutex_);
  SequenceId id{next_seq_id_++, kind};
  sequences_[id.id].kind = kind;
  return id;
}

void CellPool::destroy_sequence(SequenceId seq) {
  std::lock_guard lock(mutex_);
  auto& s = find_locked(seq);
  truncate_locked(s, 0);
  sequences_.erase(seq.id);
}

bool CellPool::contains(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  return sequences_.contains(seq.id);
}

CellIndex CellPool::allocate_locked() {
  CellIndex cell;
  if (!free_.empty()) {
    cell = free_.back();
    free_.pop_back();
  } else {
    cell = static_cast<CellIndex>(refs_.size());
    if (static_cast<std::int64_t>(blocks_.size()) * kBlockCells <= cell) {
      blocks_.push_back(std::make_unique<float[]>(static_cast<std::size_t>(kBlockCells * 2 * dim_)));
    }
    refs_.push_back(0);
  }
  refs_[static_cast<std::size_t>(cell)] = 1;
  ++used_;
  return cell;
}

void CellPool::release_locked(CellIndex cell) {
  auto& r = refs_[static_cast<std::size_t>(cell)];
  if (--r == 0) {
    free_.push_back(cell);
    --used_;
  }
}

void CellPool::truncate_locked(SequenceIndex& s, std::size_t keep) {
  const auto L = static_cast<std::size_t>(layers_);
  for (std::size_t i = keep * L; i < s.cells.size(); ++i) release_locked(s.cells[i]);
  s.positions.resize(keep);
  s.regions.resize(keep);
  s.cells.resize(keep * L);
}

std::size_t CellPool::seq_remove(SequenceId seq, Position from_pos) {
  std::lock_guard lock(mutex_);
  auto& s = find_locked(seq);
  const auto it = std::lower_bound(s.positions.begin(), s.positions.end(), from_pos);
  const auto keep = static_cast<std::size_t>(it - s.positions.begin());
  const std::size_t removed = s.size() - keep;
  truncate_locked(s, keep);
  return removed;
}

std::vector<Position> CellPool::evict_oldest(SequenceId seq, std::size_t n_tokens) {
  std::lock_guard lock(mutex_);
  auto& s = find_locked(seq);
  if (n_tokens == 0) return {};

  std::vector<std::size_t> victims;
  victims.reserve(n_tokens);
  for (std::size_t i = 0; i < s.size() && victims.size() < n_tokens; ++i) {
    if (s.regions[i] == RegionTag::kSliding) victims.push_back(i);
  }
  if (victims.size() < n_tokens) {
    throw Error(ErrorCode::kInsufficientSliding, "evict_oldest: need " + std::to_string(n_tokens) +
                                                     " sliding tokens, have " + std::to_string(victims.size()));
  }

  const auto L = static_cast<std::size_t>(layers_);
  std::vector<Position> evicted;
  evicted.reserve(n_tokens);
  SequenceIndex kept;
  kept.kind = s.kind;
  kept.positions.reserve(s.size() - n_tokens);
  kept.regions.reserve(s.size() - n_tokens);
  kept.cells.reserve((s.size() - n_tokens) * L);
  std::size_t v = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (v < victims.size() && victims[v] == i) {
      ++v;
      evicted.push_back(s.positions[i]);
      for (std::size_t l = 0; l < L; ++l) release_locked(s.cells[i * L + l]);
      continue;
    }
    kept.positions.push_back(s.positions[i]);
    kept.regions.push_back(s.regions[i]);
    kept.cells.insert(kept.cells.end(), s.cells.begin() + static_cast<std::ptrdiff_t>(i * L),
                      s.cells.begin() + static_cast<std::ptrdiff_t>((i + 1) * L));
  }
  s = std::move(kept);
  return evicted;
}

void CellPool::alias_prefix(SequenceId donor, SequenceId target, std::size_t len_tokens) {
  std::lock_guard lock(mutex_);
  const auto& d = find_locked(donor);
  auto& t = find_locked(target);
  if (len_tokens == 0) return;
  if (!t.empty()) throw Error(ErrorCode::kInvalidArgument, "alias_prefix: target not empty");
  if (d.size() < len_tokens) throw Error(ErrorCode::kInvalidArgument, "alias_prefix: donor shorter than prefix");
  const auto L = static_cast<std::size_t>(layers_);
  t.positions.assign(d.positions.begin(), d.positions.begin() + static_cast<std::ptrdiff_t>(len_tokens));
  t.regions.assign(d.regions.begin(), d.regions.begin() + static_cast<std::ptrdiff_t>(len_tokens));
  t.cells.assign(d.cells.begin(), d.cells.begin() + static_cast<std::ptrdiff_t>(len_tokens * L));
  for (auto c : t.cells) ++refs_[static_cast<std::size_t>(c)];
}

Occupancy CellPool::occupancy() const {
  std::lock_guard lock(mutex_);
  return {used_, capacity_};
}

std::uint64_t CellPool::digest(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  const auto& s = find_locked(seq);
  const auto L = static_cast<std::size_t>(layers_);
  const auto bytes = static_cast<std::size_t>(dim_) * sizeof(float);
  Fnv1a h;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t l = 0; l < L; ++l) {
      const float* p = payload(s.cells[i * L + l]);
      h.update_u64(static_cast<std::uint64_t>(s.positions[i]));
      h.update(p, bytes);
      h.update(p + dim_, bytes);
    }
  }
  return h.value();
}

std::size_t CellPool::token_count(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  return find_locked(seq).size();
}

std::size_t CellPool::region_count(SequenceId seq, RegionTag tag) const {
  std::lock_guard lock(mutex_);
  const auto& s = find_locked(seq);
  return static_cast<std::size_t>(std::count(s.regions.begin(), s.regions.end(), tag));
}

Position CellPool::last_position(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  const auto& s = find_locked(seq);
  return s.empty() ? -1 : s.positions.back();
}

std::vector<Position> CellPool::positions(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  return find_locked(seq).positions;
}

std::vector<CellIndex> CellPool::cells(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  return find_locked(seq).cells;
}

std::uint32_t CellPool::ref_count(CellIndex cell) const {
  std::lock_guard lock(mutex_);
  if (cell < 0 || static_cast<std::size_t>(cell) >= refs_.size()) return 0;
  return refs_[static_cast<std::size_t>(cell)];
}

std::int64_t CellPool::kv_bytes(SequenceId seq) const {
  std::lock_guard lock(mutex_);
  const auto& s = find_locked(seq);
  return static_cast<std::int64_t>(s.cells.size()) * 2 * dim_ * static_cast<std::int64_t>(sizeof(float));
}

std::size_t CellPool::WriteTxn::append_tokens(SequenceId seq, Position start_pos, std::size_t n, RegionTag region) {
  auto& s = pool_.find_locked(seq);
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "append_tokens: empty token range");
  if (!s.empty() && start_pos <= s.positions.back()) {
    throw Error(ErrorCode::kInvalidArgument, "append_tokens: start position " + std::to_string(start_pos) +
                                                 " not after last cached position " +
                                                 std::to_string(s.positions.back()));
  }
  if (!s.empty() && region < s.regions.back()) {
    throw Error(ErrorCode::kInvalidArgument, "append_tokens: region order violated");
  }
  const auto L = static_cast<std::size_t>(pool_.layers_);
  const auto need = static_cast<std::int64_t>(n * L);
  if (pool_.used_ + need > pool_.capacity_) {
    throw Error(ErrorCode::kPoolExhausted, "cell pool exhausted: need " + std::to_string(need) + ", free " +
                                               std::to_string(pool_.capacity_ - pool_.used_));
  }
  const std::size_t first = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    s.positions.push_back(start_pos + static_cast<Position>(i));
    s.regions.push_back(region);
    for (std::size_t l = 0; l < L; ++l) s.cells.push_back(pool_.allocate_locked());
  }
  return first;
}

}  // namespace streamkv::kv

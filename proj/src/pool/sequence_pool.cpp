// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/pool/sequence_pool.hpp"

#include <algorithm>

#include "streamkv/common/error.hpp"

namespace streamkv::pool {

SequencePool::SequencePool(kv::CellPool& cells, std::size_t transient, std::size_t sessions) : cells_(cells) {
  // Reverse so that the lowest id is handed out first.
  for (std::size_t i = 0; i < transient; ++i) transient_.free.push_back(cells_.create_sequence(SequenceKind::kTransient));
  for (std::size_t i = 0; i < sessions; ++i) sessions_.free.push_back(cells_.create_sequence(SequenceKind::kSession));
  std::reverse(transient_.free.begin(), transient_.free.end());
  std::reverse(sessions_.free.begin(), sessions_.free.end());
  transient_.capacity = transient;
  sessions_.capacity = sessions;
}

SequencePool::Lane& SequencePool::lane(SequenceKind kind) {
  if (kind == SequenceKind::kTransient) return transient_;
  if (kind == SequenceKind::kSession) return sessions_;
  throw Error(ErrorCode::kInvalidArgument, "sequence pool serves transient and session slots only");
}

const SequencePool::Lane& SequencePool::lane(SequenceKind kind) const {
  return const_cast<SequencePool*>(this)->lane(kind);
}

SequenceId SequencePool::acquire(SequenceKind kind, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  Lane& l = lane(kind);
  if (l.waiters.empty() && !l.free.empty()) {
    const SequenceId id = l.free.back();
    l.free.pop_back();
    return id;
  }
  const std::uint64_t ticket = next_ticket_++;
  l.waiters.push_back(ticket);
  const bool ok = cv_.wait_for(lock, timeout, [&] { return l.waiters.front() == ticket && !l.free.empty(); });
  if (!ok) {
    l.waiters.erase(std::find(l.waiters.begin(), l.waiters.end(), ticket));
    lock.unlock();
    cv_.notify_all();  // the next waiter may now be at the front
    throw Error(ErrorCode::kTimeout, "no free sequence slot");
  }
  l.waiters.pop_front();
  const SequenceId id = l.free.back();
  l.free.pop_back();
  lock.unlock();
  cv_.notify_all();
  return id;
}

void SequencePool::release(SequenceId id) {
  cells_.seq_remove(id, 0);
  {
    std::lock_guard lock(mutex_);
    Lane& l = lane(id.kind);
    if (std::any_of(l.free.begin(), l.free.end(), [&](SequenceId s) { return s == id; })) {
      throw Error(ErrorCode::kInvalidArgument, "sequence slot released twice");
    }
    l.free.push_back(id);
  }
  cv_.notify_all();
}

std::size_t SequencePool::free_count(SequenceKind kind) const {
  std::lock_guard lock(mutex_);
  return lane(kind).free.size();
}

std::size_t SequencePool::capacity(SequenceKind kind) const {
  std::lock_guard lock(mutex_);
  return lane(kind).capacity;
}

std::size_t SequencePool::waiting(SequenceKind kind) const {
  std::lock_guard lock(mutex_);
  return lane(kind).waiters.size();
}

}  // namespace streamkv::pool

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/stream/ring_buffer.hpp"

#include <algorithm>

#include "streamkv/common/error.hpp"

namespace streamkv::stream {

RingBuffer::RingBuffer(std::size_t capacity)
    : capacity_(capacity), buffers_(capacity + 2), slots_(capacity) {
  if (capacity == 0 || capacity + 2 >= (1u << kBufferBits)) {
    throw Error(ErrorCode::kInvalidArgument, "ring buffer capacity out of range");
  }
  // Slot i starts empty at position i - capacity so that the first write to it
  // (position i) never looks like an overwrite.
  for (std::size_t i = 0; i < capacity; ++i) {
    slots_[i].store(pack(0, static_cast<std::uint32_t>(i), false), std::memory_order_relaxed);
  }
  producer_spare_ = static_cast<std::uint32_t>(capacity);
  consumer_spare_ = static_cast<std::uint32_t>(capacity + 1);
}

PushResult RingBuffer::push(std::string record) {
  const std::uint64_t h = head_.load(std::memory_order_relaxed);
  buffers_[producer_spare_] = std::move(record);
  const std::uint64_t old =
      slots_[h % capacity_].exchange(pack(h, producer_spare_, true), std::memory_order_acq_rel);
  head_.store(h + 1, std::memory_order_release);
  producer_spare_ = buffer_of(old);
  PushResult r;
  if (full_of(old)) {
    dropped_.fetch_add(1, std::memory_order_acq_rel);
    r.dropped_delta = 1;
  }
  return r;
}

std::vector<std::string> RingBuffer::drain(std::size_t max) {
  std::vector<std::string> out;
  std::uint64_t c = consumer_cursor_.load(std::memory_order_relaxed);
  while (out.size() < max) {
    const std::uint64_t h = head_.load(std::memory_order_acquire);
    if (h > capacity_ && c < h - capacity_) c = h - capacity_;
    if (c >= h) break;
    auto& slot = slots_[c % capacity_];
    std::uint64_t seen = slot.load(std::memory_order_acquire);
    if (pos_of(seen) != c || !full_of(seen)) {
      // Overwritten by a newer record: position c was dropped.
      ++c;
      continue;
    }
    if (!slot.compare_exchange_strong(seen, pack(c, consumer_spare_, false), std::memory_order_acq_rel)) {
      ++c;
      continue;
    }
    const std::uint32_t taken = buffer_of(seen);
    out.push_back(std::move(buffers_[taken]));
    buffers_[taken].clear();
    consumer_spare_ = taken;
    ++c;
  }
  consumer_cursor_.store(c, std::memory_order_release);
  drained_.fetch_add(out.size(), std::memory_order_acq_rel);
  return out;
}

std::size_t RingBuffer::pending() const {
  const std::uint64_t h = head_.load(std::memory_order_acquire);
  const std::uint64_t c = consumer_cursor_.load(std::memory_order_acquire);
  const std::uint64_t floor = h > capacity_ ? std::max(c, h - capacity_) : c;
  return h > floor ? static_cast<std::size_t>(h - floor) : 0;
}

}  // namespace streamkv::stream

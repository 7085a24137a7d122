// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

namespace streamkv::stream {

struct PushResult {
  bool accepted = true;
  std::uint64_t dropped_delta = 0;
};

/// Bounded single-producer / single-consumer record ring with drop-oldest
/// overflow. push() never waits on the consumer.
///
/// Records live in capacity + 2 string buffers whose ownership moves between
/// the ring slots, the producer's spare and the consumer's spare. A slot word
/// packs (position, buffer, full flag). The producer publishes by exchanging
/// its spare into the slot; if it gets back an unconsumed record, that record
/// was the oldest pending one and is counted as dropped. The consumer claims a
/// record by compare-exchanging the exact (position, buffer, full) word it
/// observed, so a record is either consumed or dropped, never both.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity);
  RingBuffer(const RingBuffer&) = delete;
  RingBuffer& operator=(const RingBuffer&) = delete;

  /// Producer side.
  PushResult push(std::string record);

  /// Consumer side: removes up to max oldest pending records in arrival order.
  std::vector<std::string> drain(std::size_t max);

  std::size_t capacity() const { return capacity_; }
  std::uint64_t pushed_total() const { return head_.load(std::memory_order_acquire); }
  std::uint64_t dropped_total() const { return dropped_.load(std::memory_order_acquire); }
  std::uint64_t drained_total() const { return drained_.load(std::memory_order_acquire); }
  /// Exact at quiescence.
  std::size_t pending() const;

 private:
  static constexpr int kBufferBits = 21;
  static constexpr std::uint64_t kFull = 1;

  static std::uint64_t pack(std::uint64_t pos, std::uint32_t buffer, bool full) {
    return (pos << (kBufferBits + 1)) | (static_cast<std::uint64_t>(buffer) << 1) | (full ? kFull : 0);
  }
  static std::uint64_t pos_of(std::uint64_t w) { return w >> (kBufferBits + 1); }
  static std::uint32_t buffer_of(std::uint64_t w) {
    return static_cast<std::uint32_t>((w >> 1) & ((1u << kBufferBits) - 1));
  }
  static bool full_of(std::uint64_t w) { return (w & kFull) != 0; }

  const std::size_t capacity_;
  std::vector<std::string> buffers_;
  std::vector<std::atomic<std::uint64_t>> slots_;

  alignas(64) std::atomic<std::uint64_t> head_{0};
  alignas(64) std::atomic<std::uint64_t> dropped_{0};
  std::uint32_t producer_spare_;

  alignas(64) std::atomic<std::uint64_t> drained_{0};
  std::atomic<std::uint64_t> consumer_cursor_{0};
  std::uint32_t consumer_spare_;
};

}  // namespace streamkv::stream

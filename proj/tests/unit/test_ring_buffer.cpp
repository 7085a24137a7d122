// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <thread>

#include "streamkv/stream/ring_buffer.hpp"

using streamkv::stream::RingBuffer;

TEST(RingBuffer, OverflowDropsOldest) {
  RingBuffer rb(8);
  std::uint64_t dropped = 0;
  for (int i = 0; i < 10; ++i) dropped += rb.push("r" + std::to_string(i)).dropped_delta;
  EXPECT_EQ(dropped, 2u);
  EXPECT_EQ(rb.pending(), 8u);
  EXPECT_EQ(rb.dropped_total(), 2u);
  const auto out = rb.drain(100);
  ASSERT_EQ(out.size(), 8u);
  EXPECT_EQ(out.front(), "r2");
  EXPECT_EQ(out.back(), "r9");
  EXPECT_EQ(rb.pending(), 0u);
  EXPECT_EQ(rb.pushed_total(), 10u);
  EXPECT_EQ(rb.drained_total(), 8u);
}

TEST(RingBuffer, DrainRespectsMax) {
  RingBuffer rb(16);
  for (int i = 0; i < 5; ++i) rb.push(std::to_string(i));
  auto a = rb.drain(2);
  auto b = rb.drain(10);
  EXPECT_EQ(a, (std::vector<std::string>{"0", "1"}));
  EXPECT_EQ(b, (std::vector<std::string>{"2", "3", "4"}));
  EXPECT_TRUE(rb.drain(10).empty());
}

TEST(RingBuffer, MatchesReferenceQueueSingleThreaded) {
  std::mt19937 rng(11);
  for (std::size_t cap : {1u, 2u, 5u, 64u}) {
    RingBuffer rb(cap);
    std::deque<std::string> ref;
    std::uint64_t ref_dropped = 0;
    int next = 0;
    for (int step = 0; step < 5000; ++step) {
      if (rng() % 3 != 0) {
        const std::string r = std::to_string(next++);
        rb.push(r);
        ref.push_back(r);
        if (ref.size() > cap) {
          ref.pop_front();
          ++ref_dropped;
        }
      } else {
        const std::size_t m = rng() % (cap + 2);
        const auto got = rb.drain(m);
        std::vector<std::string> want;
        while (want.size() < m && !ref.empty()) {
          want.push_back(ref.front());
          ref.pop_front();
        }
        ASSERT_EQ(got, want) << "cap " << cap << " step " << step;
      }
      ASSERT_EQ(rb.pending(), ref.size());
      ASSERT_EQ(rb.dropped_total(), ref_dropped);
    }
  }
}

TEST(RingBuffer, ConcurrentAccountingIsExact) {
  RingBuffer rb(32);
  constexpr int kTotal = 200000;
  std::vector<std::string> seen;
  std::atomic<bool> done{false};
  std::thread consumer([&] {
    while (!done.load() || rb.pending() > 0) {
      auto got = rb.drain(7);
      seen.insert(seen.end(), got.begin(), got.end());
    }
  });
  for (int i = 0; i < kTotal; ++i) rb.push(std::to_string(i));
  done.store(true);
  consumer.join();
  auto rest = rb.drain(1000);
  seen.insert(seen.end(), rest.begin(), rest.end());
  EXPECT_EQ(seen.size() + rb.dropped_total(), static_cast<std::size_t>(kTotal));
  EXPECT_EQ(rb.drained_total(), seen.size());
  // Strictly increasing: no duplicates, no reordering.
  for (std::size_t i = 1; i < seen.size(); ++i) ASSERT_LT(std::stoi(seen[i - 1]), std::stoi(seen[i]));
  EXPECT_EQ(seen.back(), std::to_string(kTotal - 1));
}

TEST(RingBuffer, RejectsZeroCapacity) { EXPECT_ANY_THROW(RingBuffer(0)); }

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <future>

#include "streamkv/common/error.hpp"
#include "streamkv/sched/dispatcher.hpp"

using namespace streamkv;
using streamkv::sched::Dispatcher;

namespace {

// Occupies the worker until the returned promise is fulfilled.
std::promise<void> block(Dispatcher& d) {
  std::promise<void> gate;
  auto fut = gate.get_future().share();
  std::promise<void> started;
  auto s = started.get_future();
  d.submit(Priority::kStream, "gate", [fut, &started] {
    started.set_value();
    fut.wait();
  });
  s.wait();
  return gate;
}

}  // namespace

TEST(Dispatcher, HigherPriorityOvertakesQueuedWork) {
  Dispatcher d;
  std::vector<std::string> order;
  auto gate = block(d);
  auto tb = d.submit(Priority::kStream, "b", [&] { order.push_back("b"); });
  auto tc = d.submit(Priority::kFlash, "c", [&] { order.push_back("c"); });
  gate.set_value();
  tb.get();
  tc.get();
  EXPECT_EQ(order, (std::vector<std::string>{"c", "b"}));
}

TEST(Dispatcher, FifoWithinClassAndClassOrder) {
  Dispatcher d;
  d.set_recording(true);
  auto gate = block(d);
  std::vector<Dispatcher::Ticket> t;
  for (int i = 0; i < 3; ++i) {
    for (Priority p : {Priority::kStream, Priority::kPool, Priority::kSession, Priority::kFlash}) {
      t.push_back(d.submit(p, std::string(to_string(p)) + std::to_string(i), [] {}));
    }
  }
  gate.set_value();
  for (auto& x : t) x.get();
  auto log = d.execution_log();
  ASSERT_EQ(log.size(), 13u);
  log.erase(log.begin());
  for (std::size_t i = 1; i < log.size(); ++i) {
    const auto a = static_cast<int>(log[i - 1].priority);
    const auto b = static_cast<int>(log[i].priority);
    ASSERT_LE(a, b);
    if (a == b) ASSERT_LT(log[i - 1].submit_seq, log[i].submit_seq);
  }
  EXPECT_EQ(log.front().label, "FLASH0");
  EXPECT_EQ(log.back().label, "STREAM2");
}

TEST(Dispatcher, RunReturnsValueAndRethrows) {
  Dispatcher d;
  EXPECT_EQ(d.run(Priority::kSession, "v", [] { return 41 + 1; }), 42);
  EXPECT_THROW(d.run(Priority::kSession, "e", []() -> int { throw Error(ErrorCode::kSizing, "x"); }), Error);
  // Nested run on the worker executes inline instead of deadlocking.
  const int v = d.run(Priority::kPool, "outer", [&] { return d.run(Priority::kFlash, "inner", [] { return 7; }); });
  EXPECT_EQ(v, 7);
}

TEST(Dispatcher, SubmitAfterShutdownThrows) {
  Dispatcher d;
  d.shutdown();
  try {
    d.submit(Priority::kPool, "late", [] {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShutdown);
  }
}

TEST(Dispatcher, QueueDepthsReflectPendingWork) {
  Dispatcher d;
  auto gate = block(d);
  auto a = d.submit(Priority::kPool, "a", [] {});
  auto b = d.submit(Priority::kPool, "b", [] {});
  auto c = d.submit(Priority::kFlash, "c", [] {});
  const auto depths = d.queue_depths();
  EXPECT_EQ(depths[static_cast<std::size_t>(Priority::kPool)], 2u);
  EXPECT_EQ(depths[static_cast<std::size_t>(Priority::kFlash)], 1u);
  gate.set_value();
  a.get();
  b.get();
  c.get();
  EXPECT_EQ(d.executed(), 4u);
}

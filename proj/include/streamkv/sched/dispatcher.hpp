// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <array>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "streamkv/common/error.hpp"
#include "streamkv/common/types.hpp"

namespace streamkv::sched {

struct ExecutionRecord {
  Priority priority;
  std::uint64_t submit_seq;
  std::string label;
};

/// Single model-dispatch worker fronted by a priority queue.
///
/// Every unit of model work is submitted as one batch. The worker pops the
/// highest-priority batch (FIFO by submission number within a class), runs
/// it to completion and signals its submitter. Preemption happens only at
/// batch boundaries, so a FLASH submission waits for at most the batch that
/// is already running.
class Dispatcher {
 public:
  Dispatcher();
  ~Dispatcher();
  Dispatcher(const Dispatcher&) = delete;
  Dispatcher& operator=(const Dispatcher&) = delete;

  using Ticket = std::shared_future<void>;

  Ticket submit(Priority priority, std::string label, std::function<void()> batch);

  /// Submits and blocks until the batch has run; rethrows its exception.
  template <typename F>
  auto run(Priority priority, std::string label, F&& fn) -> decltype(fn()) {
    using R = decltype(fn());
    if (on_worker_thread()) return fn();
    if constexpr (std::is_void_v<R>) {
      submit(priority, std::move(label), std::forward<F>(fn)).get();
    } else {
      std::optional<R> out;
      submit(priority, std::move(label), [&] { out.emplace(fn()); }).get();
      return std::move(*out);
    }
  }

  bool on_worker_thread() const { return std::this_thread::get_id() == worker_id_; }

  void shutdown();

  /// Artificial per-batch delay (test hook for scheduling bounds).
  void set_batch_delay(std::chrono::microseconds delay) { delay_us_.store(delay.count()); }

  void set_recording(bool on);
  std::vector<ExecutionRecord> execution_log() const;
  std::array<std::size_t, kNumPriorities> queue_depths() const;
  std::uint64_t executed() const { return executed_.load(); }

 private:
  struct Item {
    Priority priority;
    std::uint64_t seq;
    std::string label;
    std::function<void()> fn;
    std::shared_ptr<std::promise<void>> done;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.seq > b.seq;
    }
  };

  void loop();

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  std::array<std::size_t, kNumPriorities> depth_{};
  std::uint64_t next_seq_ = 0;
  bool stopping_ = false;
  bool recording_ = false;
  std::vector<ExecutionRecord> log_;
  std::atomic<std::int64_t> delay_us_{0};
  std::atomic<std::uint64_t> executed_{0};
  std::thread::id worker_id_;
  std::thread worker_;
};

}  // namespace streamkv::sched

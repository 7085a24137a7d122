// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/sched/dispatcher.hpp"

namespace streamkv::sched {

Dispatcher::Dispatcher() {
  std::promise<void> started;
  auto ready = started.get_future();
  worker_ = std::thread([this, &started] {
    worker_id_ = std::this_thread::get_id();
    started.set_value();
    loop();
  });
  ready.wait();
}

Dispatcher::~Dispatcher() { shutdown(); }

void Dispatcher::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ && !worker_.joinable()) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable() && !on_worker_thread()) worker_.join();
}

Dispatcher::Ticket Dispatcher::submit(Priority priority, std::string label, std::function<void()> batch) {
  auto done = std::make_shared<std::promise<void>>();
  Ticket ticket = done->get_future().share();
  {
    std::lock_guard lock(mutex_);
    if (stopping_) throw Error(ErrorCode::kShutdown, "dispatcher is shutting down");
    queue_.push(Item{priority, next_seq_++, std::move(label), std::move(batch), std::move(done)});
    ++depth_[static_cast<std::size_t>(priority)];
  }
  cv_.notify_one();
  return ticket;
}

void Dispatcher::loop() {
  for (;;) {
    Item item;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      item = std::move(const_cast<Item&>(queue_.top()));
      queue_.pop();
      --depth_[static_cast<std::size_t>(item.priority)];
      if (recording_) log_.push_back({item.priority, item.seq, item.label});
    }
    std::exception_ptr failure;
    try {
      item.fn();
    } catch (...) {
      failure = std::current_exception();
    }
    // Simulated batch time; the batch stays in flight until it elapses.
    if (const auto us = delay_us_.load(); us > 0) std::this_thread::sleep_for(std::chrono::microseconds(us));
    if (failure) {
      item.done->set_exception(failure);
    } else {
      item.done->set_value();
    }
    executed_.fetch_add(1);
  }
}

void Dispatcher::set_recording(bool on) {
  std::lock_guard lock(mutex_);
  recording_ = on;
  if (on) log_.clear();
}

std::vector<ExecutionRecord> Dispatcher::execution_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::array<std::size_t, kNumPriorities> Dispatcher::queue_depths() const {
  std::lock_guard lock(mutex_);
  return depth_;
}

}  // namespace streamkv::sched

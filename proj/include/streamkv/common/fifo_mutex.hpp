// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>

namespace streamkv {

/// Ticket lock: waiters acquire in arrival order. Satisfies Lockable.
class FifoMutex {
 public:
  void lock() {
    std::unique_lock lk(m_);
    const std::uint64_t ticket = next_++;
    cv_.wait(lk, [&] { return serving_ == ticket; });
  }
  bool try_lock() {
    std::lock_guard lk(m_);
    if (serving_ != next_) return false;
    ++next_;
    return true;
  }
  void unlock() {
    {
      std::lock_guard lk(m_);
      ++serving_;
    }
    cv_.notify_all();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::uint64_t next_ = 0;
  std::uint64_t serving_ = 0;
};

}  // namespace streamkv

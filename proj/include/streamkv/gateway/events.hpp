// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamkv/session/session.hpp"

namespace streamkv::gateway {

/// Serializes for the wire. Generated text may hold arbitrary fallback bytes,
/// so invalid UTF-8 is replaced instead of throwing.
inline std::string wire_dump(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

struct Event {
  std::uint64_t id = 0;
  std::string type;  // flash_ready | data_updated | stats
  std::string session_id;
  std::uint64_t data_version = 0;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  /// "id:", "event:" and "data:" lines followed by a blank line.
  std::string sse_frame() const;
};

/// Converts a session event to its wire form (id left at 0).
Event make_event(const std::string& session_id, const session::SessionEvent& ev);

enum class PollStatus { kEvents, kTimeout, kLagged, kClosed };

/// Per-session ordered event log with bounded history. Subscribers keep their
/// own cursor (the next id they want) so several can read the same stream and
/// a reconnecting client can resume after its last seen id. A subscriber that
/// falls more than `max_lag` events behind, or behind the retained history, is
/// told to disconnect.
class EventHub {
 public:
  EventHub(std::size_t history, std::size_t max_lag) : history_(history), max_lag_(max_lag) {}

  std::uint64_t publish(Event ev);
  PollStatus poll(std::uint64_t& cursor, std::vector<Event>& out, std::chrono::milliseconds timeout,
                  std::size_t max_events = 256);
  /// Cursor for a new subscriber: after last_seen when resuming, else live.
  std::uint64_t start_cursor(std::uint64_t last_seen) const;
  std::uint64_t latest_id() const;
  std::vector<Event> snapshot() const;
  void close();

 private:
  const std::size_t history_;
  const std::size_t max_lag_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Event> log_;
  std::uint64_t next_id_ = 1;
  bool closed_ = false;
};

}  // namespace streamkv::gateway

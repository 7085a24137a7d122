// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/gateway/events.hpp"

namespace streamkv::gateway {

using nlohmann::json;

json Event::to_json() const {
  return {{"id", id}, {"type", type}, {"session_id", session_id}, {"data_version", data_version}, {"data", payload}};
}

std::string Event::sse_frame() const {
  return "id: " + std::to_string(id) + "\nevent: " + type + "\ndata: " + wire_dump(to_json()) + "\n\n";
}

Event make_event(const std::string& session_id, const session::SessionEvent& ev) {
  Event e;
  e.session_id = session_id;
  if (const auto* du = std::get_if<session::DataUpdated>(&ev)) {
    e.type = "data_updated";
    e.data_version = du->version;
    e.payload = {{"version", du->version},
                 {"records", du->records},
                 {"tokens", du->tokens},
                 {"evicted", du->evicted},
                 {"context_tokens", du->context_tokens}};
  } else if (const auto* fr = std::get_if<session::FlashReady>(&ev)) {
    const auto& x = fr->entry;
    e.type = "flash_ready";
    e.data_version = x.version;
    e.payload = {{"flash_id", x.id},
                 {"question", x.question},
                 {"answer", x.answer_text},
                 {"answer_token", x.answer},
                 {"confidence", x.gap},
                 {"version", x.version}};
  } else {
    const auto& st = std::get<session::StatsUpdate>(ev);
    e.type = "stats";
    e.data_version = st.version;
    e.payload = {{"version", st.version},
                 {"pending", st.pending},
                 {"dropped_total", st.dropped_total},
                 {"pushed_total", st.pushed_total},
                 {"ingest_errors", st.ingest_errors},
                 {"context_tokens", st.context_tokens}};
  }
  return e;
}

std::uint64_t EventHub::publish(Event ev) {
  std::uint64_t id;
  {
    std::lock_guard lock(mutex_);
    id = next_id_++;
    ev.id = id;
    log_.push_back(std::move(ev));
    while (log_.size() > history_) log_.pop_front();
  }
  cv_.notify_all();
  return id;
}

std::uint64_t EventHub::start_cursor(std::uint64_t last_seen) const {
  std::lock_guard lock(mutex_);
  return last_seen > 0 ? last_seen + 1 : next_id_;
}

PollStatus EventHub::poll(std::uint64_t& cursor, std::vector<Event>& out, std::chrono::milliseconds timeout,
                          std::size_t max_events) {
  std::unique_lock lock(mutex_);
  const bool ready = cv_.wait_for(lock, timeout, [&] { return closed_ || next_id_ > cursor; });
  if (next_id_ > cursor) {
    const std::uint64_t oldest = log_.empty() ? next_id_ : log_.front().id;
    if (cursor < oldest || next_id_ - cursor > max_lag_) return PollStatus::kLagged;
    for (auto it = log_.begin() + static_cast<std::ptrdiff_t>(cursor - oldest);
         it != log_.end() && out.size() < max_events; ++it) {
      out.push_back(*it);
      cursor = it->id + 1;
    }
    return PollStatus::kEvents;
  }
  if (closed_) return PollStatus::kClosed;
  return ready ? PollStatus::kEvents : PollStatus::kTimeout;
}

std::uint64_t EventHub::latest_id() const {
  std::lock_guard lock(mutex_);
  return next_id_ - 1;
}

std::vector<Event> EventHub::snapshot() const {
  std::lock_guard lock(mutex_);
  return {log_.begin(), log_.end()};
}

void EventHub::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

}  // namespace streamkv::gateway

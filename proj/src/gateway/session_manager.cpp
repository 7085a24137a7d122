// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/gateway/session_manager.hpp"

#include <cmath>

namespace streamkv::gateway {

using nlohmann::json;

std::optional<std::string> record_text(const json& record) {
  if (record.is_string()) {
    auto s = record.get<std::string>();
    if (s.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
    return s;
  }
  if (!record.is_object()) return std::nullopt;
  static const char* const kFields[] = {"o", "h", "l", "c", "v"};
  static const char* const kMarkers[] = {"O", "H", "L", "C", "V"};
  std::string out;
  for (int i = 0; i < 5; ++i) {
    const auto it = record.find(kFields[i]);
    if (it == record.end() || !it->is_number()) return std::nullopt;
    const double v = it->get<double>();
    if (!std::isfinite(v) || v < 0 || v != std::floor(v)) return std::nullopt;
    if (!out.empty()) out += ' ';
    out += kMarkers[i];
    out += ' ';
    out += std::to_string(static_cast<long long>(v));
  }
  return out;
}

SessionManager::SessionManager(Runtime& rt, ServiceConfig config) : rt_(rt), config_(std::move(config)) {}

SessionManager::~SessionManager() {
  std::unordered_map<std::string, Entry> all;
  {
    std::lock_guard lock(mutex_);
    all.swap(sessions_);
  }
  for (auto& [id, e] : all) {
    e.hub->close();
    e.session->stop_worker();
  }
}

std::string SessionManager::create(const json& payload) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    if (sessions_.size() >= config_.server.max_sessions) {
      throw Error(ErrorCode::kQuotaExceeded, "session limit reached");
    }
    id = "s" + std::to_string(next_id_++);
  }
  auto cfg = session_config_from(payload, config_.session);
  auto hub = std::make_shared<EventHub>(config_.server.event_history, config_.server.subscriber_lag);
  auto s = std::make_shared<session::Session>(rt_, id, cfg,
                                              [hub, id](const session::SessionEvent& ev) { hub->publish(make_event(id, ev)); });
  s->start_worker();
  std::lock_guard lock(mutex_);
  sessions_[id] = Entry{std::move(s), std::move(hub)};
  return id;
}

bool SessionManager::remove(const std::string& id) {
  Entry e;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    e = std::move(it->second);
    sessions_.erase(it);
  }
  e.hub->close();
  e.session->stop_worker();
  return true;
}

SessionManager::Entry SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "unknown session " + id);
  return it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

PushOutcome SessionManager::push(const std::string& id, const json& records) {
  const Entry e = get(id);
  if (!records.is_array()) throw Error(ErrorCode::kInvalidArgument, "records must be an array");
  PushOutcome out;
  for (const auto& r : records) {
    auto text = record_text(r);
    if (!text) {
      ++out.skipped;
      continue;
    }
    e.session->push(std::move(*text));
    ++out.accepted;
  }
  malformed_ += out.skipped;
  out.dropped_total = e.session->ring().dropped_total();
  out.pending = e.session->ring().pending();
  return out;
}

}  // namespace streamkv::gateway

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamkv/gateway/config.hpp"
#include "streamkv/gateway/events.hpp"
#include "streamkv/session/session.hpp"

namespace streamkv::gateway {

struct PushOutcome {
  std::size_t accepted = 0;
  std::size_t skipped = 0;  // malformed records
  std::uint64_t dropped_total = 0;
  std::size_t pending = 0;
};

/// Record text from a wire record: a non-empty string is taken as is; an
/// object with numeric o/h/l/c/v becomes "O o H h L l C c V v".
std::optional<std::string> record_text(const nlohmann::json& record);

/// Live sessions by id, each with its event hub and ingestion worker.
class SessionManager {
 public:
  SessionManager(Runtime& rt, ServiceConfig config);
  ~SessionManager();

  struct Entry {
    std::shared_ptr<session::Session> session;
    std::shared_ptr<EventHub> hub;
  };

  /// Throws kQuotaExceeded at the session limit.
  std::string create(const nlohmann::json& payload);
  bool remove(const std::string& id);
  /// Throws kUnknownSession.
  Entry get(const std::string& id) const;
  std::vector<std::string> ids() const;

  /// Enqueues records without waiting for ingestion.
  PushOutcome push(const std::string& id, const nlohmann::json& records);

  const ServiceConfig& config() const { return config_; }
  std::uint64_t malformed_total() const { return malformed_.load(); }

 private:
  Runtime& rt_;
  const ServiceConfig config_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Entry> sessions_;
  std::uint64_t next_id_ = 1;
  std::atomic<std::uint64_t> malformed_{0};
};

}  // namespace streamkv::gateway

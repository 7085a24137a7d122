// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "streamkv/pool/stateless_service.hpp"
#include "streamkv/runtime.hpp"
#include "streamkv/session/session.hpp"

namespace streamkv::gateway {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int http_port = 8080;
  int ws_port = 8081;
  std::size_t event_history = 4096;     // events kept per session for resume
  std::size_t subscriber_lag = 1024;    // events a subscriber may fall behind
  std::size_t max_sessions = 16;
};

/// Everything the service reads from its JSON config file. Missing keys keep
/// their defaults.
struct ServiceConfig {
  RuntimeConfig runtime;
  session::SessionConfig session;  // defaults for new sessions
  pool::StatelessConfig stateless;
  ServerConfig server;
};

ServiceConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ServiceConfig& c);
ServiceConfig load_config(const std::string& path);

/// Applies per-session overrides from a creation payload.
session::SessionConfig session_config_from(const nlohmann::json& payload, const session::SessionConfig& defaults);

}  // namespace streamkv::gateway

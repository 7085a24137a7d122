// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <thread>

#include "streamkv/gateway/session_manager.hpp"

namespace streamkv::gateway {

/// WebSocket endpoint at /v1/sessions/{id}/ws. Inbound text frames carry
/// records (same shapes as the HTTP push body); each is answered with an ack
/// frame. The session's events are pushed outbound as they are published.
class WebSocketServer {
 public:
  WebSocketServer(SessionManager& sessions, std::string host, int port);
  ~WebSocketServer();

  void start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parses a WebSocket data frame into a records array; nullopt if malformed.
std::optional<nlohmann::json> frame_records(const std::string& text);

}  // namespace streamkv::gateway

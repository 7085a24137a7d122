// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <thread>

#include <nlohmann/json.hpp>

#include "streamkv/gateway/config.hpp"
#include "streamkv/gateway/session_manager.hpp"
#include "streamkv/pool/stateless_service.hpp"

namespace httplib {
class Server;
}

namespace streamkv::gateway {

class WebSocketServer;

/// HTTP status for an engine error.
int http_status(ErrorCode code);

/// The network service: REST + SSE over HTTP, event/data frames over a
/// separate WebSocket port. Port 0 picks a free port.
class Server {
 public:
  explicit Server(ServiceConfig config);
  ~Server();

  void start();
  void stop();
  int http_port() const { return http_port_; }
  int ws_port() const;

  Runtime& runtime() { return *rt_; }
  SessionManager& sessions() { return *sessions_; }
  pool::StatelessService& stateless() { return *stateless_; }
  nlohmann::json stats_json() const;

 private:
  void routes();

  ServiceConfig config_;
  std::unique_ptr<Runtime> rt_;
  std::unique_ptr<pool::StatelessService> stateless_;
  std::unique_ptr<SessionManager> sessions_;
  std::unique_ptr<httplib::Server> http_;
  std::unique_ptr<WebSocketServer> ws_;
  std::thread http_thread_;
  int http_port_ = 0;
  std::atomic<bool> stopping_{false};
};

}  // namespace streamkv::gateway

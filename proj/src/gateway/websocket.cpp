// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/gateway/websocket.hpp"

#include <deque>
#include <regex>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace streamkv::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

std::optional<json> frame_records(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  if (j.is_object() && j.contains("records")) j = j.at("records");
  if (j.is_array()) return j;
  if (j.is_object() || j.is_string()) return json::array({j});
  return std::nullopt;
}

namespace {

constexpr auto kPumpInterval = std::chrono::milliseconds(10);

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, SessionManager& sessions)
      : ws_(std::move(socket)), sessions_(sessions), timer_(ws_.get_executor()) {}

  void run() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

 private:
  void on_request(beast::error_code ec) {
    if (ec) return;
    static const std::regex kPath(R"(^/v1/sessions/([^/?]+)/ws(?:\?last_event_id=(\d+))?$)");
    std::smatch m;
    const std::string target(request_.target());
    if (!websocket::is_upgrade(request_) || !std::regex_match(target, m, kPath)) {
      reject(http::status::bad_request);
      return;
    }
    try {
      entry_ = sessions_.get(m[1]);
    } catch (const Error&) {
      reject(http::status::not_found);
      return;
    }
    session_id_ = m[1];
    const std::uint64_t last_seen = m[2].matched ? std::stoull(m[2]) : 0;
    cursor_ = entry_.hub->start_cursor(last_seen);
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
      self->pump();
    });
  }

  void reject(http::status status) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::content_type, "application/json");
    res->body() = wire_dump(json{{"error", {{"code", status == http::status::not_found ? "unknown_session" : "bad_request"}}}});
    res->prepare_payload();
    http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      self->on_frame(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void on_frame(const std::string& text) {
    const auto records = frame_records(text);
    if (!records) {
      send(wire_dump(json{{"type", "error"}, {"error", {{"code", "invalid_argument"}, {"message", "malformed frame"}}}}));
      return;
    }
    try {
      const auto out = sessions_.push(session_id_, *records);
      send(wire_dump(json{{"type", "ack"},
                {"accepted", out.accepted},
                {"skipped", out.skipped},
                {"dropped_total", out.dropped_total},
                {"pending", out.pending}}));
    } catch (const Error& e) {
      send(wire_dump(json{{"type", "error"}, {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}));
    }
  }

  void pump() {
    if (closed_) return;
    std::vector<Event> batch;
    switch (entry_.hub->poll(cursor_, batch, std::chrono::milliseconds(0))) {
      case PollStatus::kLagged:
      case PollStatus::kClosed:
        close();
        return;
      default: break;
    }
    for (const auto& ev : batch) send(wire_dump(ev.to_json()));
    timer_.expires_after(kPumpInterval);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->pump();
    });
  }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec) {
        self->closed_ = true;
        self->writing_ = false;
        return;
      }
      self->write_next();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  SessionManager& sessions_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  SessionManager::Entry entry_;
  std::string session_id_;
  std::uint64_t cursor_ = 0;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct WebSocketServer::Impl {
  Impl(SessionManager& s, std::string h, int p) : sessions(s), host(std::move(h)), port(p), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), sessions)->run();
      accept();
    });
  }

  SessionManager& sessions;
  std::string host;
  int port;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  std::thread thread;
  int bound = 0;
};

WebSocketServer::WebSocketServer(SessionManager& sessions, std::string host, int port)
    : impl_(std::make_unique<Impl>(sessions, std::move(host), port)) {}

WebSocketServer::~WebSocketServer() { stop(); }

void WebSocketServer::start() {
  const tcp::endpoint ep(net::ip::make_address(impl_->host), static_cast<unsigned short>(impl_->port));
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->bound = impl_->acceptor.local_endpoint().port();
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WebSocketServer::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  beast::error_code ignored;
  impl_->acceptor.close(ignored);
}

int WebSocketServer::port() const { return impl_->bound; }

}  // namespace streamkv::gateway

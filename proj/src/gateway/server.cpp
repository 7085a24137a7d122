// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/gateway/server.hpp"

#include <httplib.h>

#include "streamkv/gateway/websocket.hpp"

namespace streamkv::gateway {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 400;
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownSequence: return 404;
    case ErrorCode::kRegistryFull: return 409;
    case ErrorCode::kSizing:
    case ErrorCode::kLengthOverflow: return 413;
    case ErrorCode::kQuotaExceeded: return 429;
    case ErrorCode::kPoolExhausted:
    case ErrorCode::kInsufficientSliding:
    case ErrorCode::kTimeout:
    case ErrorCode::kShutdown: return 503;
  }
  return 500;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(wire_dump(body), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "body must be a JSON object");
  return j;
}

/// Runs a handler, mapping engine and JSON errors to responses.
template <typename F>
httplib::Server::Handler guarded(F fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "invalid_json", e.what());
    } catch (const std::logic_error& e) {
      // std::stoull and friends on malformed headers or params.
      reply_error(res, 400, "invalid_argument", e.what());
    }
  };
}

json query_json(const session::QueryResult& r) {
  return {{"text", r.text},
          {"path", session::to_string(r.path)},
          {"data_version", r.data_version},
          {"prompt_tokens", r.prompt_tokens},
          {"generated_tokens", r.generated},
          {"confidence", r.gap}};
}

std::size_t max_tokens_of(const json& body, std::size_t fallback) {
  if (!body.contains("max_tokens")) return fallback;
  const auto v = body.at("max_tokens").get<long long>();
  if (v < 0) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

Server::Server(ServiceConfig config) : config_(std::move(config)) {
  rt_ = std::make_unique<Runtime>(config_.runtime);
  stateless_ = std::make_unique<pool::StatelessService>(*rt_, config_.stateless);
  sessions_ = std::make_unique<SessionManager>(*rt_, config_);
  http_ = std::make_unique<httplib::Server>();
  ws_ = std::make_unique<WebSocketServer>(*sessions_, config_.server.host, config_.server.ws_port);
  routes();
}

Server::~Server() {
  stop();
  ws_.reset();
  http_.reset();
  sessions_.reset();
  stateless_.reset();
  rt_.reset();
}

int Server::ws_port() const { return ws_->port(); }

void Server::start() {
  if (config_.server.http_port == 0) {
    http_port_ = http_->bind_to_any_port(config_.server.host);
  } else if (http_->bind_to_port(config_.server.host, config_.server.http_port)) {
    http_port_ = config_.server.http_port;
  } else {
    http_port_ = -1;
  }
  if (http_port_ <= 0) throw Error(ErrorCode::kInvalidArgument, "cannot bind HTTP port");
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  ws_->start();
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  // Closing hubs ends open SSE streams so the HTTP workers can drain.
  if (sessions_) {
    for (const auto& id : sessions_->ids()) {
      try {
        sessions_->get(id).hub->close();
      } catch (const Error&) {
      }
    }
  }
  if (ws_) ws_->stop();
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
}

json Server::stats_json() const {
  const auto occ = rt_->pool.occupancy();
  const auto fs = rt_->model.stats().snapshot();
  json forwards = json::object();
  for (const auto p : kAllPriorities) {
    const auto i = static_cast<std::size_t>(p);
    forwards[std::string(to_string(p))] = {{"prefill", fs.prefill[i]}, {"decode", fs.decode[i]}};
  }
  json depths = json::object();
  const auto qd = rt_->dispatcher.queue_depths();
  for (const auto p : kAllPriorities) depths[std::string(to_string(p))] = qd[static_cast<std::size_t>(p)];
  const auto es = stateless_->engine().stats();
  const auto cache = [](const pool::StatelessService::CacheStats& c) {
    return json{{"size", c.size}, {"capacity", c.capacity}, {"hits", c.hits}, {"misses", c.misses}};
  };
  json radix = nullptr;
  if (auto* r = stateless_->prefix_cache()) {
    radix = {{"nodes", r->node_count()},
             {"committed_cells", r->committed_cells()},
             {"budget_cells", r->budget_cells()},
             {"skipped_inserts", r->skipped_inserts()},
             {"evictions", r->evictions()}};
  }
  json sessions = json::array();
  for (const auto& id : sessions_->ids()) {
    try {
      const auto e = sessions_->get(id);
      const auto st = e.session->stats();
      sessions.push_back({{"session_id", id},
                          {"data_version", st.version},
                          {"context_tokens", st.context_tokens},
                          {"pending", st.pending},
                          {"dropped_total", st.dropped_total},
                          {"ingest_errors", st.ingest_errors}});
    } catch (const Error&) {
    }
  }
  return {
      {"pool", {{"used_cells", occ.used_cells}, {"capacity_cells", occ.capacity_cells}}},
      {"forwarded_tokens", forwards},
      {"scheduler",
       {{"queue_depths", depths},
        {"executed_batches", rt_->dispatcher.executed()},
        {"iterations", es.iterations},
        {"deferred_iterations", es.deferred_iterations},
        {"deferred_chunks", es.deferred_chunks},
        {"sizing_errors", es.sizing_errors},
        {"drafts_proposed", es.drafts_proposed},
        {"drafts_accepted", es.drafts_accepted},
        {"acceptance_rate", es.drafts_proposed ? static_cast<double>(es.drafts_accepted) /
                                                     static_cast<double>(es.drafts_proposed)
                                               : 0.0},
        {"grouped_followers", es.grouped_followers},
        {"aliased_tokens", es.aliased_tokens},
        {"restored_tokens", es.restored_tokens},
        {"active", es.active},
        {"waiting", es.waiting}}},
      {"caches",
       {{"response", cache(stateless_->response_stats())},
        {"render", cache(stateless_->render_stats())},
        {"tokenize", cache(stateless_->tokenize_stats())},
        {"prefix", radix}}},
      {"sessions", sessions},
      {"malformed_records", sessions_->malformed_total()},
  };
}

void Server::routes() {
  auto& h = *http_;

  h.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           const std::string id = sessions_->create(body);
           const auto e = sessions_->get(id);
           const auto l = e.session->layout();
           reply(res, 201,
                 {{"session_id", id},
                  {"data_version", e.session->data_version()},
                  {"frozen_tokens", l.frozen_tokens},
                  {"context_tokens", e.session->context_tokens()},
                  {"header_tokens", e.session->header_tokens().size()},
                  {"flash_questions", e.session->registry().size()}});
         }));

  h.Get(R"(/v1/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto e = sessions_->get(req.matches[1]);
          const auto l = e.session->layout();
          const auto st = e.session->stats();
          reply(res, 200,
                {{"session_id", e.session->id()},
                 {"data_version", st.version},
                 {"cycles", e.session->cycles()},
                 {"context_tokens", st.context_tokens},
                 {"frozen_tokens", l.frozen_tokens},
                 {"sliding_tokens", l.sliding_tokens},
                 {"header_pos", l.header_pos},
                 {"pending", st.pending},
                 {"dropped_total", st.dropped_total},
                 {"kv_bytes", runtime().pool.kv_bytes(e.session->seq())}});
        }));

  h.Delete(R"(/v1/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
             if (!sessions_->remove(req.matches[1])) {
               throw Error(ErrorCode::kUnknownSession, "unknown session " + std::string(req.matches[1]));
             }
             res.status = 204;
           }));

  h.Post(R"(/v1/sessions/([^/]+)/data)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.contains("records")) throw Error(ErrorCode::kInvalidArgument, "missing records");
           const auto out = sessions_->push(req.matches[1], body.at("records"));
           reply(res, 202,
                 {{"accepted", out.accepted},
                  {"skipped", out.skipped},
                  {"dropped_total", out.dropped_total},
                  {"pending", out.pending}});
         }));

  h.Post(R"(/v1/sessions/([^/]+)/generate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           const auto e = sessions_->get(req.matches[1]);
           const std::string q = body.value("query", std::string());
           const int max_tokens = static_cast<int>(
               max_tokens_of(body, static_cast<std::size_t>(e.session->config().default_max_tokens)));
           const bool spec = body.value("allow_speculative", true);
           reply(res, 200, query_json(e.session->query(q, max_tokens, spec)));
         }));

  h.Post(R"(/v1/sessions/([^/]+)/flash)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           const auto e = sessions_->get(req.matches[1]);
           const auto id = e.session->register_flash(body.value("question", std::string()));
           reply(res, 201, {{"flash_id", id}, {"registered", e.session->registry().size()}});
         }));

  h.Get(R"(/v1/sessions/([^/]+)/flash)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto e = sessions_->get(req.matches[1]);
          json list = json::array();
          const auto version = e.session->data_version();
          for (const auto& x : e.session->registry().entries()) {
            list.push_back({{"flash_id", x.id},
                            {"question", x.question},
                            {"answer", x.answer_text},
                            {"confidence", x.gap},
                            {"version", x.version},
                            {"fresh", x.version == version}});
          }
          reply(res, 200, {{"data_version", version}, {"entries", list}});
        }));

  h.Get(R"(/v1/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto e = sessions_->get(req.matches[1]);
          std::uint64_t last_seen = 0;
          if (req.has_header("Last-Event-ID")) {
            last_seen = std::stoull(req.get_header_value("Last-Event-ID"));
          } else if (req.has_param("last_event_id")) {
            last_seen = std::stoull(req.get_param_value("last_event_id"));
          }
          auto hub = e.hub;
          auto cursor = std::make_shared<std::uint64_t>(hub->start_cursor(last_seen));
          res.set_header("Cache-Control", "no-cache");
          res.set_chunked_content_provider(
              "text/event-stream", [hub, cursor, this](std::size_t, httplib::DataSink& sink) {
                if (stopping_) {
                  sink.done();
                  return true;
                }
                std::vector<Event> batch;
                switch (hub->poll(*cursor, batch, std::chrono::milliseconds(500))) {
                  case PollStatus::kLagged: return false;  // slow consumer: drop the connection
                  case PollStatus::kClosed: sink.done(); return true;
                  case PollStatus::kTimeout: {
                    static const std::string ping = ": keep-alive\n\n";
                    return sink.write(ping.data(), ping.size());
                  }
                  case PollStatus::kEvents: break;
                }
                for (const auto& ev : batch) {
                  const std::string frame = ev.sse_frame();
                  if (!sink.write(frame.data(), frame.size())) return false;
                }
                return true;
              });
        }));

  h.Post("/v1/completions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.contains("prompt") || !body.at("prompt").is_string()) {
             throw Error(ErrorCode::kInvalidArgument, "prompt must be a string");
           }
           const auto r = stateless_->complete(body.at("prompt").get<std::string>(), max_tokens_of(body, 16));
           reply(res, 200,
                 {{"object", "text_completion"},
                  {"choices", json::array({{{"index", 0}, {"text", r.text}}})},
                  {"usage", {{"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.tokens.size()}}},
                  {"seed", r.seed},
                  {"cached", r.cache_hit}});
         }));

  h.Post("/v1/chat/completions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           if (!body.contains("messages") || !body.at("messages").is_array()) {
             throw Error(ErrorCode::kInvalidArgument, "messages must be an array");
           }
           std::vector<pool::ChatMessage> msgs;
           for (const auto& m : body.at("messages")) {
             msgs.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
           }
           const auto r = stateless_->chat(msgs, max_tokens_of(body, 16));
           reply(res, 200,
                 {{"object", "chat.completion"},
                  {"choices",
                   json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", r.text}}}}})},
                  {"usage", {{"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.tokens.size()}}},
                  {"seed", r.seed},
                  {"cached", r.cache_hit}});
         }));

  h.Get("/v1/stats", guarded([this](const httplib::Request&, httplib::Response& res) { reply(res, 200, stats_json()); }));
}

}  // namespace streamkv::gateway

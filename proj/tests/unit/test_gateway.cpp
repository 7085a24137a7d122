// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <httplib.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "streamkv/bench/dataset.hpp"
#include "streamkv/common/error.hpp"
#include "streamkv/gateway/config.hpp"
#include "streamkv/gateway/events.hpp"
#include "streamkv/gateway/server.hpp"
#include "streamkv/gateway/session_manager.hpp"
#include "streamkv/gateway/websocket.hpp"

using namespace streamkv;
using namespace streamkv::gateway;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

ServiceConfig small_service() {
  ServiceConfig c;
  c.runtime.capacity_cells = 1 << 17;
  c.runtime.transient_slots = 4;
  c.runtime.session_slots = 3;
  c.session.retention_tokens = 2048;
  c.session.system_prompt = "You are an analyst .";
  c.server.http_port = 0;
  c.server.ws_port = 0;
  c.server.max_sessions = 2;
  return c;
}

json records_json(std::uint64_t seed, std::size_t n) {
  json a = json::array();
  for (const auto& r : bench::gen_dataset(seed, n)) {
    a.push_back({{"o", r.open}, {"h", r.high}, {"l", r.low}, {"c", r.close}, {"v", r.volume}});
  }
  return a;
}

template <typename Pred>
bool wait_for(Pred p, std::chrono::milliseconds limit = 20s) {
  const auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (p()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return p();
}

Event ev(const std::string& type) {
  Event e;
  e.type = type;
  e.session_id = "s1";
  return e;
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
  const json in = {{"pool", {{"capacity_cells", 4096}, {"transient_slots", 3}}},
                   {"session", {{"retention_tokens", 512}, {"tau", 1.5}, {"flash_questions", {"a ?"}}}},
                   {"scheduler", {{"high_water", 0.9}, {"pld", {{"small", 6}}}, {"speculation", false}}},
                   {"caches", {{"response", 10}}},
                   {"server", {{"http_port", 9000}, {"max_sessions", 3}}}};
  const auto c = parse_config(in);
  EXPECT_EQ(c.runtime.capacity_cells, 4096);
  EXPECT_EQ(c.runtime.transient_slots, 3u);
  EXPECT_EQ(c.session.retention_tokens, 512u);
  EXPECT_FLOAT_EQ(c.session.tau, 1.5f);
  EXPECT_EQ(c.session.flash_questions, std::vector<std::string>{"a ?"});
  EXPECT_DOUBLE_EQ(c.stateless.engine.planner.high_water, 0.9);
  EXPECT_EQ(c.stateless.engine.planner.cap_small, 6u);
  EXPECT_FALSE(c.stateless.engine.speculation);
  EXPECT_EQ(c.stateless.response_cache, 10u);
  EXPECT_EQ(c.server.http_port, 9000);
  EXPECT_EQ(to_json(parse_config(to_json(c))), to_json(c));
  EXPECT_EQ(to_json(parse_config(json::object())), to_json(ServiceConfig{}));
}

TEST(Config, SessionOverrides) {
  session::SessionConfig d;
  const auto s = session_config_from({{"system_prompt", "hi"}, {"retention_tokens", 100}}, d);
  EXPECT_EQ(s.system_prompt, "hi");
  EXPECT_EQ(s.retention_tokens, 100u);
  EXPECT_EQ(s.header_text, d.header_text);
}

TEST(Records, TextFromWireShapes) {
  EXPECT_EQ(record_text(json("O 1 H 2 L 0 C 1 V 5")).value(), "O 1 H 2 L 0 C 1 V 5");
  EXPECT_EQ(record_text(json{{"o", 1}, {"h", 2}, {"l", 0}, {"c", 1}, {"v", 5}}).value(), "O 1 H 2 L 0 C 1 V 5");
  EXPECT_FALSE(record_text(json("")));
  EXPECT_FALSE(record_text(json{{"o", 1}}));
  EXPECT_FALSE(record_text(json{{"o", -1}, {"h", 2}, {"l", 0}, {"c", 1}, {"v", 5}}));
  EXPECT_FALSE(record_text(json(3)));
}

TEST(EventHub, ResumeAfterLastSeen) {
  EventHub hub(16, 8);
  for (int i = 0; i < 5; ++i) hub.publish(ev("stats"));
  EXPECT_EQ(hub.latest_id(), 5u);
  std::uint64_t cursor = hub.start_cursor(2);
  std::vector<Event> out;
  ASSERT_EQ(hub.poll(cursor, out, 0ms), PollStatus::kEvents);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.front().id, 3u);
  EXPECT_EQ(out.back().id, 5u);
  out.clear();
  EXPECT_EQ(hub.poll(cursor, out, 10ms), PollStatus::kTimeout);
  std::uint64_t live = hub.start_cursor(0);
  hub.publish(ev("data_updated"));
  ASSERT_EQ(hub.poll(live, out, 0ms), PollStatus::kEvents);
  EXPECT_EQ(out.back().type, "data_updated");
}

TEST(EventHub, LaggingSubscriberIsDisconnected) {
  EventHub hub(100, 4);
  std::uint64_t cursor = hub.start_cursor(0);
  for (int i = 0; i < 10; ++i) hub.publish(ev("stats"));
  std::vector<Event> out;
  EXPECT_EQ(hub.poll(cursor, out, 0ms), PollStatus::kLagged);

  EventHub small(3, 100);
  std::uint64_t c2 = small.start_cursor(0);
  for (int i = 0; i < 5; ++i) small.publish(ev("stats"));
  EXPECT_EQ(small.poll(c2, out, 0ms), PollStatus::kLagged);
  small.close();
  std::uint64_t c3 = small.start_cursor(0);
  EXPECT_EQ(small.poll(c3, out, 0ms), PollStatus::kClosed);
}

TEST(EventHub, SseFrameFormat) {
  Event e = ev("flash_ready");
  e.id = 7;
  const auto f = e.sse_frame();
  EXPECT_EQ(f.rfind("id: 7\nevent: flash_ready\ndata: {", 0), 0u);
  EXPECT_EQ(f.substr(f.size() - 2), "\n\n");
}

TEST(Gateway, StatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::kInvalidArgument), 400);
  EXPECT_EQ(http_status(ErrorCode::kUnknownSession), 404);
  EXPECT_EQ(http_status(ErrorCode::kRegistryFull), 409);
  EXPECT_EQ(http_status(ErrorCode::kSizing), 413);
  EXPECT_EQ(http_status(ErrorCode::kQuotaExceeded), 429);
  EXPECT_EQ(http_status(ErrorCode::kPoolExhausted), 503);
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server = std::make_unique<Server>(small_service());
    server->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", server->http_port());
    client->set_read_timeout(30, 0);
  }
  void TearDown() override {
    client.reset();
    server.reset();
  }
  json post(const std::string& path, const json& body, int expect) {
    auto r = client->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return r->body.empty() ? json() : json::parse(r->body);
  }
  json get(const std::string& path, int expect = 200) {
    auto r = client->Get(path);
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return json::parse(r->body);
  }
  std::unique_ptr<Server> server;
  std::unique_ptr<httplib::Client> client;
};

TEST_F(ServerTest, SessionLifecycle) {
  const auto created = post("/v1/sessions", {{"flash_questions", {"Is volume rising , YES or NO ?"}}}, 201);
  const std::string id = created.at("session_id");
  EXPECT_EQ(created.at("flash_questions"), 1);

  const auto pushed = post("/v1/sessions/" + id + "/data", {{"records", records_json(1, 10)}}, 202);
  EXPECT_EQ(pushed.at("accepted"), 10);
  EXPECT_EQ(pushed.at("skipped"), 0);
  // data_version moves mid-cycle; cycles counts completed ones.
  ASSERT_TRUE(wait_for([&] { return get("/v1/sessions/" + id).at("cycles") == 1; }));

  const auto info = get("/v1/sessions/" + id);
  EXPECT_EQ(info.at("context_tokens").get<std::size_t>(),
            created.at("context_tokens").get<std::size_t>() + 160);
  EXPECT_EQ(info.at("kv_bytes").get<std::uint64_t>(),
            kv::kv_bytes_model(4, 64, info.at("context_tokens").get<std::uint64_t>(), 4));

  const auto hit = post("/v1/sessions/" + id + "/generate", {{"query", "is volume rising , YES or NO ?"}}, 200);
  EXPECT_EQ(hit.at("path"), "FLASH_HIT");
  const auto std_q = post("/v1/sessions/" + id + "/generate",
                          {{"query", "What was the close of bar 3 ?"}, {"max_tokens", 3}, {"allow_speculative", false}}, 200);
  EXPECT_EQ(std_q.at("path"), "STANDARD");
  EXPECT_LE(std_q.at("generated_tokens").get<int>(), 3);

  post("/v1/sessions/" + id + "/flash", {{"question", "Is the current trend UP or DOWN ?"}}, 201);
  const auto fl = get("/v1/sessions/" + id + "/flash");
  EXPECT_EQ(fl.at("entries").size(), 2u);

  const auto bad = post("/v1/sessions/" + id + "/data", {{"records", {"", {{"o", 1}}, "O 1 H 2 L 0 C 1 V 5"}}}, 202);
  EXPECT_EQ(bad.at("accepted"), 1);
  EXPECT_EQ(bad.at("skipped"), 2);

  auto del = client->Delete("/v1/sessions/" + id);
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 204);
  get("/v1/sessions/" + id, 404);
}

TEST_F(ServerTest, ErrorsMapToStatus) {
  post("/v1/sessions/nope/data", {{"records", json::array()}}, 404);
  post("/v1/sessions", {{"header_text", ""}}, 400);
  auto r = client->Post("/v1/completions", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  post("/v1/sessions", json::object(), 201);
  post("/v1/sessions", json::object(), 201);
  const auto quota = post("/v1/sessions", json::object(), 429);
  EXPECT_EQ(quota.at("error").at("code"), "quota_exceeded");
  post("/v1/completions", {{"prompt", std::string(40000, 'a')}}, 413);
}

TEST_F(ServerTest, StatelessCompletionsAreDeterministic) {
  const auto a = post("/v1/completions", {{"prompt", "what is the trend ?"}, {"max_tokens", 5}}, 200);
  const auto b = post("/v1/completions", {{"prompt", "what is the trend ?"}, {"max_tokens", 5}}, 200);
  EXPECT_EQ(a.at("choices"), b.at("choices"));
  EXPECT_EQ(a.at("seed"), b.at("seed"));
  EXPECT_FALSE(a.at("cached").get<bool>());
  EXPECT_TRUE(b.at("cached").get<bool>());
  const auto c = post("/v1/chat/completions", {{"messages", {{{"role", "user"}, {"content", "hello"}}}}}, 200);
  EXPECT_EQ(c.at("choices")[0].at("message").at("role"), "assistant");
  const auto st = get("/v1/stats");
  EXPECT_EQ(st.at("caches").at("response").at("hits"), 1);
  EXPECT_TRUE(st.at("forwarded_tokens").contains("POOL"));
}

TEST_F(ServerTest, SseStreamsAndResumes) {
  const std::string id = post("/v1/sessions", {{"flash_questions", {"Is volume rising , YES or NO ?"}}}, 201).at("session_id");
  std::string body;
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", server->http_port());
    c.set_read_timeout(30, 0);
    c.Get("/v1/sessions/" + id + "/events?last_event_id=0", [&](const char* data, std::size_t n) {
      body.append(data, n);
      return body.find("event: stats") == std::string::npos;
    });
  });
  std::this_thread::sleep_for(100ms);
  post("/v1/sessions/" + id + "/data", {{"records", records_json(2, 5)}}, 202);
  reader.join();
  const auto d = body.find("event: data_updated");
  const auto f = body.find("event: flash_ready");
  const auto s = body.find("event: stats");
  ASSERT_NE(d, std::string::npos);
  ASSERT_NE(f, std::string::npos);
  EXPECT_LT(d, f);
  EXPECT_LT(f, s);

  // Resume from the first event: the rest are replayed.
  const auto hub = server->sessions().get(id).hub;
  ASSERT_GE(hub->latest_id(), 3u);
  std::string replay;
  httplib::Client c("127.0.0.1", server->http_port());
  httplib::Headers h = {{"Last-Event-ID", "1"}};
  c.Get("/v1/sessions/" + id + "/events", h, [&](const char* data, std::size_t n) {
    replay.append(data, n);
    return replay.find("event: stats") == std::string::npos;
  });
  EXPECT_EQ(replay.find("id: 1\n"), std::string::npos);
  EXPECT_NE(replay.find("id: 2\n"), std::string::npos);
}

TEST_F(ServerTest, WebSocketPushAndEvents) {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;
  const std::string id = post("/v1/sessions", json::object(), 201).at("session_id");

  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  websocket::stream<tcp::socket> ws(ioc);
  boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server->ws_port())));
  ws.handshake("127.0.0.1", "/v1/sessions/" + id + "/ws");
  ws.text(true);
  ws.write(boost::asio::buffer(json{{"records", records_json(3, 4)}}.dump()));

  bool acked = false, data = false;
  beast::flat_buffer buf;
  for (int i = 0; i < 20 && !(acked && data); ++i) {
    ws.read(buf);
    const json msg = json::parse(beast::buffers_to_string(buf.data()));
    buf.consume(buf.size());
    if (msg.at("type") == "ack") {
      acked = true;
      EXPECT_EQ(msg.at("accepted"), 4);
    }
    if (msg.at("type") == "data_updated") data = true;
  }
  EXPECT_TRUE(acked);
  EXPECT_TRUE(data);

  ws.write(boost::asio::buffer(std::string("{broken")));
  // Events of the earlier cycle may still be in flight; skip to the reply.
  std::string reply_type;
  for (int i = 0; i < 20; ++i) {
    ws.read(buf);
    const json msg = json::parse(beast::buffers_to_string(buf.data()));
    buf.consume(buf.size());
    reply_type = msg.at("type");
    if (reply_type == "error" || reply_type == "ack") break;
  }
  EXPECT_EQ(reply_type, "error");
  ws.close(websocket::close_code::normal);
}

TEST(WebSocketFrames, Parsing) {
  EXPECT_EQ(frame_records(R"({"records":["a"]})")->size(), 1u);
  EXPECT_EQ(frame_records(R"(["a","b"])")->size(), 2u);
  EXPECT_EQ(frame_records(R"("a")")->size(), 1u);
  EXPECT_FALSE(frame_records("{oops"));
  EXPECT_FALSE(frame_records("3"));
}

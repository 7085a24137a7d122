// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/gateway/config.hpp"

#include <fstream>

namespace streamkv::gateway {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_session(const json& s, session::SessionConfig& c) {
  read(s, "system_prompt", c.system_prompt);
  read(s, "retention_tokens", c.retention_tokens);
  read(s, "flash_questions", c.flash_questions);
  read(s, "header_text", c.header_text);
  read(s, "fast_vocab", c.fast_vocab);
  read(s, "tau", c.tau);
  read(s, "ring_capacity", c.ring_capacity);
  read(s, "batch_records", c.batch_records);
  read(s, "n_batch", c.n_batch);
  read(s, "flash_cap", c.flash_cap);
  read(s, "max_query_tokens", c.max_query_tokens);
  read(s, "default_max_tokens", c.default_max_tokens);
}

json session_json(const session::SessionConfig& c) {
  return {{"system_prompt", c.system_prompt},       {"retention_tokens", c.retention_tokens},
          {"flash_questions", c.flash_questions},   {"header_text", c.header_text},
          {"fast_vocab", c.fast_vocab},             {"tau", c.tau},
          {"ring_capacity", c.ring_capacity},       {"batch_records", c.batch_records},
          {"n_batch", c.n_batch},                   {"flash_cap", c.flash_cap},
          {"max_query_tokens", c.max_query_tokens}, {"default_max_tokens", c.default_max_tokens}};
}

}  // namespace

ServiceConfig parse_config(const json& j) {
  ServiceConfig c;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    auto& mc = c.runtime.model;
    read(m, "layers", mc.layers);
    read(m, "model_dim", mc.model_dim);
    read(m, "heads", mc.heads);
    read(m, "head_dim", mc.head_dim);
    read(m, "vocab_size", mc.vocab_size);
    read(m, "weight_seed", mc.weight_seed);
    read(m, "max_positions", mc.max_positions);
    read(m, "mlp_ratio", mc.mlp_ratio);
  }
  if (j.contains("pool")) {
    const auto& p = j.at("pool");
    read(p, "capacity_cells", c.runtime.capacity_cells);
    read(p, "transient_slots", c.runtime.transient_slots);
    read(p, "session_slots", c.runtime.session_slots);
    read(p, "prefix_cache_cells", c.stateless.prefix_cache_cells);
    read(p, "prefix_cache", c.stateless.use_prefix_cache);
  }
  if (j.contains("session")) read_session(j.at("session"), c.session);
  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    auto& pc = c.stateless.engine.planner;
    read(s, "n_batch", pc.n_batch);
    read(s, "chunk_min", pc.chunk_min);
    read(s, "chunk_max", pc.chunk_max);
    read(s, "high_water", pc.high_water);
    read(s, "group_window", pc.group_window);
    read(s, "speculation", c.stateless.engine.speculation);
    read(s, "grouping", c.stateless.engine.grouping);
    if (s.contains("pld")) {
      const auto& d = s.at("pld");
      read(d, "small_n", pc.cap_small_n);
      read(d, "small", pc.cap_small);
      read(d, "mid_n", pc.cap_mid_n);
      read(d, "mid", pc.cap_mid);
      read(d, "large", pc.cap_large);
      read(d, "ema_floor", pc.ema_floor);
      read(d, "ema_alpha", pc.ema_alpha);
      read(d, "max_ngram", pc.max_ngram);
    }
  }
  if (j.contains("caches")) {
    const auto& k = j.at("caches");
    read(k, "response", c.stateless.response_cache);
    read(k, "render", c.stateless.render_cache);
    read(k, "tokenize", c.stateless.tokenize_cache);
    read(k, "response_enabled", c.stateless.use_response_cache);
  }
  if (j.contains("server")) {
    const auto& s = j.at("server");
    read(s, "host", c.server.host);
    read(s, "http_port", c.server.http_port);
    read(s, "ws_port", c.server.ws_port);
    read(s, "event_history", c.server.event_history);
    read(s, "subscriber_lag", c.server.subscriber_lag);
    read(s, "max_sessions", c.server.max_sessions);
  }
  c.runtime.model.validate();
  return c;
}

json to_json(const ServiceConfig& c) {
  const auto& m = c.runtime.model;
  const auto& pc = c.stateless.engine.planner;
  return {
      {"model",
       {{"layers", m.layers},
        {"model_dim", m.model_dim},
        {"heads", m.heads},
        {"head_dim", m.head_dim},
        {"vocab_size", m.vocab_size},
        {"weight_seed", m.weight_seed},
        {"max_positions", m.max_positions},
        {"mlp_ratio", m.mlp_ratio}}},
      {"pool",
       {{"capacity_cells", c.runtime.capacity_cells},
        {"transient_slots", c.runtime.transient_slots},
        {"session_slots", c.runtime.session_slots},
        {"prefix_cache", c.stateless.use_prefix_cache},
        {"prefix_cache_cells", c.stateless.prefix_cache_cells}}},
      {"session", session_json(c.session)},
      {"scheduler",
       {{"n_batch", pc.n_batch},
        {"chunk_min", pc.chunk_min},
        {"chunk_max", pc.chunk_max},
        {"high_water", pc.high_water},
        {"group_window", pc.group_window},
        {"speculation", c.stateless.engine.speculation},
        {"grouping", c.stateless.engine.grouping},
        {"pld",
         {{"small_n", pc.cap_small_n},
          {"small", pc.cap_small},
          {"mid_n", pc.cap_mid_n},
          {"mid", pc.cap_mid},
          {"large", pc.cap_large},
          {"ema_floor", pc.ema_floor},
          {"ema_alpha", pc.ema_alpha},
          {"max_ngram", pc.max_ngram}}}}},
      {"caches",
       {{"response", c.stateless.response_cache},
        {"render", c.stateless.render_cache},
        {"tokenize", c.stateless.tokenize_cache},
        {"response_enabled", c.stateless.use_response_cache}}},
      {"server",
       {{"host", c.server.host},
        {"http_port", c.server.http_port},
        {"ws_port", c.server.ws_port},
        {"event_history", c.server.event_history},
        {"subscriber_lag", c.server.subscriber_lag},
        {"max_sessions", c.server.max_sessions}}},
  };
}

ServiceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config file " + path);
  try {
    return parse_config(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad config: ") + e.what());
  }
}

session::SessionConfig session_config_from(const json& payload, const session::SessionConfig& defaults) {
  session::SessionConfig c = defaults;
  read_session(payload, c);
  return c;
}

}  // namespace streamkv::gateway

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/bench/scenario.hpp"

#include <chrono>
#include <thread>

#include "streamkv/pool/stateless_service.hpp"
#include "streamkv/session/session.hpp"

namespace streamkv::bench {

const std::vector<QuerySpec>& default_queries() {
  static const std::vector<QuerySpec> q = {
      {"Q1", "Is the current trend UP or DOWN ?"},
      {"Q2", "Is the market in a pullback , YES or NO ?"},
      {"Q3", "Did price make a new recent high , YES or NO ?"},
      {"Q4", "Is price consolidating in a range , YES or NO ?"},
      {"Q5", "Is volume rising , YES or NO ?"},
      {"Q6", "What was the close of bar 50 ?"},
  };
  return q;
}

const char* to_string(Mode m) { return m == Mode::kStateful ? "stateful" : "request_driven"; }

std::string replay_prompt(const std::string& system_prompt, const std::vector<OhlcvRecord>& records,
                          std::size_t count, const std::string& query) {
  std::string p = system_prompt;
  for (std::size_t i = 0; i < count; ++i) {
    p += '\n';
    p += records[i].text();
  }
  p += '\n';
  p += query;
  return p;
}

Tokens replay_tokens(const model::Tokenizer& tokenizer, const std::string& system_prompt,
                     const std::vector<OhlcvRecord>& records, std::size_t count, const std::string& query) {
  Tokens out = tokenizer.tokenize(system_prompt);
  for (std::size_t i = 0; i < count; ++i) {
    const Tokens t = tokenizer.tokenize(records[i].text());
    out.insert(out.end(), t.begin(), t.end());
  }
  const Tokens q = tokenizer.tokenize(query);
  out.insert(out.end(), q.begin(), q.end());
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

LatencyReport run_stateful(Runtime& rt, const ScenarioConfig& cfg, const std::vector<OhlcvRecord>& data) {
  LatencyReport rep;
  session::SessionConfig sc;
  sc.system_prompt = cfg.system_prompt;
  sc.retention_tokens = cfg.retention_tokens;
  sc.ring_capacity = std::max<std::size_t>(1024, cfg.samples_per_iter + cfg.init_samples);
  if (cfg.register_flash) {
    for (const auto& q : cfg.queries) sc.flash_questions.push_back(q.text);
  }
  session::Session s(rt, "bench", sc);
  s.start_worker();

  // Records are pushed while the worker is held so batching is the same on
  // every run: ceil(n / batch) cycles per push.
  auto ingest = [&](std::size_t from, std::size_t to) {
    const std::uint64_t before = s.cycles();
    s.pause_worker(true);
    for (std::size_t i = from; i < to; ++i) s.push(data[i].text());
    s.pause_worker(false);
    const std::uint64_t cycles = (to - from + sc.batch_records - 1) / sc.batch_records;
    while (s.cycles() < before + cycles && s.ingest_errors() == 0) {
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  };

  ingest(0, cfg.init_samples);
  auto last = rt.model.stats().snapshot();
  std::size_t have = cfg.init_samples;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    ingest(have, have + cfg.samples_per_iter);
    have += cfg.samples_per_iter;
    if (s.ingest_errors() > 0) {
      rep.valid = false;
      rep.note = "ingestion failed at iteration " + std::to_string(it);
      break;
    }
    const auto& q = cfg.queries[(it - 1) % cfg.queries.size()];
    const auto before = rt.model.stats().snapshot();
    const auto t0 = Clock::now();
    const auto r = s.query(q.text, cfg.max_tokens, cfg.allow_speculative);
    const double wall = ms_since(t0);
    const auto after = rt.model.stats().snapshot();

    IterationRow row;
    row.iteration = static_cast<int>(it);
    row.mode = to_string(Mode::kStateful);
    row.query_id = q.id;
    row.path = session::to_string(r.path);
    row.wall_ms = wall;
    row.session_tokens = after.total(Priority::kSession) - before.total(Priority::kSession);
    row.pool_tokens = after.total(Priority::kPool) - before.total(Priority::kPool);
    row.stream_tokens = before.total(Priority::kStream) - last.total(Priority::kStream);
    row.flash_tokens = before.total(Priority::kFlash) - last.total(Priority::kFlash);
    row.context_tokens = s.context_tokens();
    row.query_tokens = rt.tokenizer.tokenize(q.text).size();
    row.generated = r.generated;
    row.answer = r.text;
    rep.rows.push_back(std::move(row));
    last = after;
  }
  s.stop_worker();
  return rep;
}

LatencyReport run_request_driven(Runtime& rt, const ScenarioConfig& cfg, const std::vector<OhlcvRecord>& data) {
  LatencyReport rep;
  pool::StatelessConfig pc;
  pc.use_prefix_cache = false;
  pc.use_response_cache = false;
  pool::StatelessService svc(rt, pc);
  std::size_t have = cfg.init_samples;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    have += cfg.samples_per_iter;
    const auto& q = cfg.queries[(it - 1) % cfg.queries.size()];
    const Tokens prompt = replay_tokens(rt.tokenizer, cfg.system_prompt, data, have, q.text);
    const auto before = rt.model.stats().snapshot();
    const auto t0 = Clock::now();
    pool::CompletionResult r;
    try {
      r = svc.complete_tokens(prompt, static_cast<std::size_t>(cfg.max_tokens));
    } catch (const Error& e) {
      rep.valid = false;
      rep.note = std::string("request failed at iteration ") + std::to_string(it) + ": " + e.what();
      break;
    }
    const double wall = ms_since(t0);
    const auto after = rt.model.stats().snapshot();
    IterationRow row;
    row.iteration = static_cast<int>(it);
    row.mode = to_string(Mode::kRequestDriven);
    row.query_id = q.id;
    row.path = "STATELESS";
    row.wall_ms = wall;
    row.pool_tokens = after.total(Priority::kPool) - before.total(Priority::kPool);
    row.context_tokens = r.prompt_tokens;
    row.query_tokens = rt.tokenizer.tokenize(q.text).size();
    row.generated = r.tokens.size();
    row.answer = r.text;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace

LatencyReport run_scenario(Runtime& rt, const ScenarioConfig& cfg) {
  if (cfg.iterations == 0) return {};
  if (cfg.queries.empty()) throw Error(ErrorCode::kInvalidArgument, "query set is empty");
  const auto data = gen_dataset(cfg.seed, cfg.init_samples + cfg.iterations * cfg.samples_per_iter);
  return cfg.mode == Mode::kStateful ? run_stateful(rt, cfg, data) : run_request_driven(rt, cfg, data);
}

}  // namespace streamkv::bench

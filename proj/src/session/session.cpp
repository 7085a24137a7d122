// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/session/session.hpp"

#include <algorithm>

#include "streamkv/flash/evaluator.hpp"

namespace streamkv::session {

const char* to_string(QueryPath p) {
  switch (p) {
    case QueryPath::kFlashHit: return "FLASH_HIT";
    case QueryPath::kSpecExit: return "SPEC_EXIT";
    case QueryPath::kStandard: return "STANDARD";
  }
  return "?";
}

std::int64_t session_reservation_cells(const Runtime& rt, const SessionConfig& config, std::size_t prompt_tokens,
                                       std::size_t header_tokens) {
  const auto tokens = prompt_tokens + config.retention_tokens + header_tokens + config.max_query_tokens;
  return static_cast<std::int64_t>(tokens) * rt.layers();
}

Session::Session(Runtime& rt, std::string id, SessionConfig config, EventSink sink)
    : rt_(rt),
      id_(std::move(id)),
      config_(std::move(config)),
      registry_(config_.flash_cap),
      ring_(config_.ring_capacity),
      sink_(std::move(sink)) {
  header_ = rt_.tokenizer.tokenize(config_.header_text);
  if (header_.empty()) throw Error(ErrorCode::kInvalidArgument, "response header must not be empty");
  if (config_.batch_records == 0 || config_.n_batch == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch sizes must be positive");
  }
  for (const auto& w : config_.fast_vocab) {
    const Tokens t = rt_.tokenizer.tokenize(w);
    if (t.size() != 1) throw Error(ErrorCode::kInvalidArgument, "fast vocabulary word is not one token: " + w);
    fast_vocab_.push_back(t[0]);
  }
  const Tokens prompt = rt_.tokenizer.tokenize(config_.system_prompt);

  reserved_cells_ = session_reservation_cells(rt_, config_, prompt.size(), header_.size());
  if (!rt_.reserve_session_cells(reserved_cells_)) {
    throw Error(ErrorCode::kQuotaExceeded, "session cell budget exhausted");
  }
  try {
    seq_ = rt_.sequences.acquire(SequenceKind::kSession, std::chrono::milliseconds(0));
  } catch (const Error&) {
    rt_.release_session_cells(reserved_cells_);
    throw Error(ErrorCode::kQuotaExceeded, "no free session slot");
  }

  try {
    if (!prompt.empty()) {
      rt_.forward(Priority::kStream, "session:system_prompt",
                  {prompt, seq_, 0, Priority::kStream, RegionTag::kFrozen, false});
    }
    frozen_end_ = static_cast<Position>(prompt.size());
    header_pos_ = frozen_end_;
    std::lock_guard turn(turn_);
    predecode_locked(Priority::kStream);
    for (const auto& q : config_.flash_questions) registry_.add(q, rt_.tokenizer);
    const auto qs = registry_.queries();
    evaluate_locked(qs);
  } catch (...) {
    rt_.sequences.release(seq_);
    rt_.release_session_cells(reserved_cells_);
    throw;
  }
}

Session::~Session() {
  stop_worker();
  rt_.sequences.release(seq_);
  rt_.release_session_cells(reserved_cells_);
}

void Session::set_event_sink(EventSink sink) {
  std::lock_guard lock(sink_mutex_);
  sink_ = std::move(sink);
}

void Session::emit(const SessionEvent& ev) {
  std::lock_guard lock(sink_mutex_);
  if (sink_) sink_(ev);
}

stream::PushResult Session::push(std::string record) {
  stream::PushResult r;
  {
    std::lock_guard lock(producer_mutex_);
    r = ring_.push(std::move(record));
  }
  wake_.fetch_add(1, std::memory_order_release);
  wake_.notify_one();
  return r;
}

void Session::start_worker() {
  if (worker_.joinable()) return;
  stop_ = false;
  worker_ = std::thread([this] { worker_loop(); });
}

void Session::stop_worker() {
  if (!worker_.joinable()) return;
  stop_ = true;
  wake_.fetch_add(1, std::memory_order_release);
  wake_.notify_one();
  worker_.join();
}

void Session::pause_worker(bool paused) {
  paused_ = paused;
  wake_.fetch_add(1, std::memory_order_release);
  wake_.notify_one();
}

void Session::worker_loop() {
  while (!stop_.load()) {
    const std::uint64_t seen = wake_.load(std::memory_order_acquire);
    std::size_t taken = 0;
    if (!paused_.load()) {
      try {
        taken = ingest_pending();
      } catch (const Error&) {
        ++ingest_errors_;
        if (stop_.load()) break;
      }
    }
    if (taken == 0) wake_.wait(seen, std::memory_order_acquire);
  }
}

std::size_t Session::ingest_pending() {
  auto batch = ring_.drain(config_.batch_records);
  if (batch.empty()) return 0;
  try {
    ingest_batch(batch);
  } catch (const Error&) {
    ++ingest_errors_;
    emit(stats());
  }
  return batch.size();
}

model::Logits Session::predecode_locked(Priority cause) {
  model::Logits logits = rt_.forward(cause, "session:header",
                                     {header_, seq_, header_pos_, cause, RegionTag::kSliding, false});
  std::lock_guard lock(ready_mutex_);
  ready_ = logits;
  ready_version_ = version_.load();
  return logits;
}

model::Logits Session::predecode_header() {
  std::lock_guard turn(turn_);
  rt_.remove(Priority::kStream, seq_, header_pos_);
  return predecode_locked(Priority::kStream);
}

void Session::evaluate_locked(std::span<const flash::FlashQuery> questions) {
  if (questions.empty()) return;
  const std::uint64_t version = version_.load();
  auto result = flash::evaluate_all(rt_, {seq_, header_pos_, header_, version}, questions,
                                    [&](const flash::FlashCacheEntry& e) {
                                      registry_.store(e);
                                      emit(FlashReady{e});
                                    });
  if (result.ready) {
    std::lock_guard lock(ready_mutex_);
    ready_ = std::move(result.ready);
    ready_version_ = version;
  }
}

std::uint64_t Session::ingest_batch(const std::vector<std::string>& records) {
  if (records.empty()) return data_version();
  Tokens tokens;
  for (const auto& r : records) {
    const Tokens t = rt_.tokenizer.tokenize(r);
    tokens.insert(tokens.end(), t.begin(), t.end());
  }
  if (tokens.empty()) return data_version();
  if (tokens.size() > config_.retention_tokens) {
    throw Error(ErrorCode::kPoolExhausted, "ingest batch larger than the retention window");
  }

  std::lock_guard turn(turn_);
  rt_.remove(Priority::kStream, seq_, header_pos_);

  std::size_t evicted = 0;
  try {
    const std::size_t sliding = rt_.pool.region_count(seq_, RegionTag::kSliding);
    if (sliding + tokens.size() > config_.retention_tokens) {
      const std::size_t n = std::min(tokens.size(), sliding);
      rt_.dispatcher.run(Priority::kStream, "session:evict", [&] { return rt_.pool.evict_oldest(seq_, n); });
      evicted = n;
      evicted_total_ += n;
    }
    std::size_t done = 0;
    while (done < tokens.size()) {
      const std::size_t n = std::min(config_.n_batch, tokens.size() - done);
      rt_.forward(Priority::kStream, "session:ingest",
                  {std::span<const TokenId>(tokens).subspan(done, n), seq_, header_pos_ + static_cast<Position>(done),
                   Priority::kStream, RegionTag::kSliding, false});
      done += n;
    }
  } catch (...) {
    // Chunks that landed stay; the context changed, so the version moves.
    const Position last = rt_.pool.last_position(seq_);
    if (last >= header_pos_) {
      header_pos_ = last + 1;
      version_.fetch_add(1);
    }
    predecode_locked(Priority::kStream);
    throw;
  }
  header_pos_ += static_cast<Position>(tokens.size());
  {
    std::lock_guard lock(ready_mutex_);
    ready_.reset();
  }
  const std::uint64_t version = version_.fetch_add(1) + 1;
  predecode_locked(Priority::kStream);

  DataUpdated du;
  du.version = version;
  du.records = records.size();
  du.tokens = tokens.size();
  du.evicted = evicted;
  du.context_tokens = rt_.pool.token_count(seq_);
  emit(du);

  const auto qs = registry_.queries();
  evaluate_locked(qs);
  emit(stats());
  cycles_.fetch_add(1, std::memory_order_release);
  return version;
}

QueryResult Session::query(const std::string& q, int max_tokens, bool allow_speculative) {
  if (max_tokens < 0) max_tokens = config_.default_max_tokens;
  QueryResult out;

  out.data_version = data_version();
  if (auto hit = registry_.lookup(q, out.data_version)) {
    out.path = QueryPath::kFlashHit;
    out.text = hit->answer_text;
    out.tokens = {hit->answer};
    out.gap = hit->gap;
    out.generated = 1;
    return out;
  }

  if (allow_speculative) {
    std::unique_lock lock(ready_mutex_);
    if (ready_ && ready_version_ == data_version()) {
      const auto pick = model::greedy_sample(*ready_);
      lock.unlock();
      const bool fast = std::find(fast_vocab_.begin(), fast_vocab_.end(), pick.token) != fast_vocab_.end();
      if (pick.gap > config_.tau && fast) {
        out.path = QueryPath::kSpecExit;
        out.text = rt_.tokenizer.detokenize(pick.token);
        out.tokens = {pick.token};
        out.gap = pick.gap;
        out.generated = 1;
        return out;
      }
    }
  }

  const Tokens qt = rt_.tokenizer.tokenize(q);
  if (qt.empty()) throw Error(ErrorCode::kInvalidArgument, "query is empty");

  std::lock_guard turn(turn_);
  out.path = QueryPath::kStandard;
  out.data_version = data_version();
  out.prompt_tokens = qt.size();
  const Position start = header_pos_ + static_cast<Position>(header_.size());
  struct Clear {
    Session* s;
    Position from;
    ~Clear() { s->rt_.remove(Priority::kSession, s->seq_, from); }
  } clear{this, start};

  model::Logits logits =
      rt_.forward(Priority::kSession, "query:prefill", {qt, seq_, start, Priority::kSession, RegionTag::kEphemeral, false});
  Position pos = start + static_cast<Position>(qt.size());
  for (int i = 0; i < max_tokens; ++i) {
    const auto pick = model::greedy_sample(logits);
    if (i == 0) out.gap = pick.gap;
    if (pick.token == model::vocab::kEos) break;
    out.tokens.push_back(pick.token);
    const TokenId tok = pick.token;
    logits = rt_.forward(Priority::kSession, "query:decode",
                         {std::span<const TokenId>(&tok, 1), seq_, pos, Priority::kSession, RegionTag::kEphemeral, true});
    ++pos;
  }
  out.generated = out.tokens.size();
  out.text = rt_.tokenizer.detokenize(out.tokens);
  return out;
}

flash::FlashId Session::register_flash(const std::string& question) {
  const auto reg = registry_.add(question, rt_.tokenizer);
  if (!reg.created) return reg.id;
  // Evaluate right away when no cycle or query holds the sequence; otherwise
  // the next ingestion cycle picks it up.
  std::unique_lock turn(turn_, std::try_to_lock);
  if (turn.owns_lock()) {
    if (auto fq = registry_.query(reg.id)) {
      evaluate_locked(std::span<const flash::FlashQuery>(&*fq, 1));
    }
  }
  return reg.id;
}

std::optional<flash::FlashCacheEntry> Session::lookup_flash(const std::string& q) const {
  return registry_.lookup(q, data_version());
}

std::optional<model::Logits> Session::ready_logits() const {
  std::lock_guard lock(ready_mutex_);
  if (ready_ && ready_version_ == data_version()) return ready_;
  return std::nullopt;
}

RegionLayout Session::layout() const {
  RegionLayout l;
  l.frozen_tokens = rt_.pool.region_count(seq_, RegionTag::kFrozen);
  l.sliding_tokens = rt_.pool.region_count(seq_, RegionTag::kSliding);
  l.ephemeral_tokens = rt_.pool.region_count(seq_, RegionTag::kEphemeral);
  l.frozen_end = frozen_end_;
  l.header_pos = header_pos_;
  l.sliding_end = header_pos_;
  return l;
}

std::uint64_t Session::digest() const { return rt_.pool.digest(seq_); }

std::size_t Session::context_tokens() const { return rt_.pool.token_count(seq_); }

StatsUpdate Session::stats() const {
  StatsUpdate s;
  s.version = data_version();
  s.pending = ring_.pending();
  s.dropped_total = ring_.dropped_total();
  s.pushed_total = ring_.pushed_total();
  s.ingest_errors = ingest_errors_.load();
  s.context_tokens = context_tokens();
  return s;
}

}  // namespace streamkv::session

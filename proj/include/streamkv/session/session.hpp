// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "streamkv/common/fifo_mutex.hpp"
#include "streamkv/flash/flash_registry.hpp"
#include "streamkv/runtime.hpp"
#include "streamkv/stream/ring_buffer.hpp"

namespace streamkv::session {

struct SessionConfig {
  std::string system_prompt;
  std::size_t retention_tokens = 16384;
  std::vector<std::string> flash_questions;
  std::string header_text = "ANSWER:";
  std::vector<std::string> fast_vocab = {"UP", "DOWN", "YES", "NO"};
  float tau = 2.0f;
  std::size_t ring_capacity = 1024;
  std::size_t batch_records = 64;
  std::size_t n_batch = 1024;          // STREAM tokens per dispatched batch
  std::size_t flash_cap = 64;
  std::size_t max_query_tokens = 256;  // counted into the session's cell reservation
  int default_max_tokens = 16;
};

enum class QueryPath { kFlashHit, kSpecExit, kStandard };
const char* to_string(QueryPath p);

struct QueryResult {
  std::string text;
  QueryPath path = QueryPath::kStandard;
  Tokens tokens;  // generated tokens (single answer token for the fast paths)
  std::uint64_t data_version = 0;
  std::size_t prompt_tokens = 0;
  std::size_t generated = 0;
  float gap = 0.0f;  // confidence of the first answer token
};

struct RegionLayout {
  std::size_t frozen_tokens = 0;
  std::size_t sliding_tokens = 0;  // data plus header
  std::size_t ephemeral_tokens = 0;
  Position frozen_end = 0;
  Position sliding_end = 0;
  Position header_pos = 0;
};

struct DataUpdated {
  std::uint64_t version = 0;
  std::size_t records = 0;
  std::size_t tokens = 0;
  std::size_t evicted = 0;
  std::size_t context_tokens = 0;
};
struct FlashReady {
  flash::FlashCacheEntry entry;
};
struct StatsUpdate {
  std::uint64_t version = 0;
  std::size_t pending = 0;
  std::uint64_t dropped_total = 0;
  std::uint64_t pushed_total = 0;
  std::uint64_t ingest_errors = 0;
  std::size_t context_tokens = 0;
};
using SessionEvent = std::variant<DataUpdated, FlashReady, StatsUpdate>;
using EventSink = std::function<void(const SessionEvent&)>;

/// A persistent context: system prompt (FROZEN), streamed data and the
/// response header (SLIDING), and a per-query scratch range (EPHEMERAL) that
/// is cleared after every query. Queries touch only their own tokens.
class Session {
 public:
  /// Acquires a session slot and cell reservation, forwards the system prompt
  /// and header, then evaluates the initial flash questions.
  Session(Runtime& rt, std::string id, SessionConfig config, EventSink sink = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  SequenceId seq() const { return seq_; }

  /// Producer side of the ingestion ring; never waits on ingestion.
  stream::PushResult push(std::string record);

  /// Background ingestion worker draining the ring in batches.
  void start_worker();
  void stop_worker();
  /// Holds the worker between cycles (test hook for stalled ingestion).
  void pause_worker(bool paused);
  /// Drains one batch and ingests it on the calling thread. Returns records taken.
  std::size_t ingest_pending();

  /// Appends records to the context and runs one full ingestion cycle.
  std::uint64_t ingest_batch(const std::vector<std::string>& records);

  QueryResult query(const std::string& q, int max_tokens = -1, bool allow_speculative = true);

  flash::FlashId register_flash(const std::string& question);
  std::optional<flash::FlashCacheEntry> lookup_flash(const std::string& q) const;
  const flash::FlashRegistry& registry() const { return registry_; }

  /// Re-decodes the header at the header position and refreshes ready logits.
  model::Logits predecode_header();

  std::uint64_t data_version() const { return version_.load(std::memory_order_acquire); }
  std::optional<model::Logits> ready_logits() const;
  RegionLayout layout() const;
  std::uint64_t digest() const;
  const Tokens& header_tokens() const { return header_; }
  std::size_t context_tokens() const;
  std::uint64_t ingest_errors() const { return ingest_errors_.load(); }
  /// Completed ingestion cycles (including flash evaluation).
  std::uint64_t cycles() const { return cycles_.load(std::memory_order_acquire); }
  std::uint64_t evicted_total() const { return evicted_total_.load(); }
  const stream::RingBuffer& ring() const { return ring_; }
  StatsUpdate stats() const;

  void set_event_sink(EventSink sink);

 private:
  void emit(const SessionEvent& ev);
  model::Logits predecode_locked(Priority cause);
  void evaluate_locked(std::span<const flash::FlashQuery> questions);
  void worker_loop();

  Runtime& rt_;
  const std::string id_;
  const SessionConfig config_;
  SequenceId seq_;
  std::int64_t reserved_cells_ = 0;
  Tokens header_;
  std::vector<TokenId> fast_vocab_;

  FifoMutex turn_;  // one ingestion cycle or standard query at a time
  Position frozen_end_ = 0;
  std::atomic<Position> header_pos_{0};
  std::atomic<std::uint64_t> version_{0};

  mutable std::mutex ready_mutex_;
  std::optional<model::Logits> ready_;
  std::uint64_t ready_version_ = 0;

  flash::FlashRegistry registry_;

  stream::RingBuffer ring_;
  std::mutex producer_mutex_;  // serializes producers; never held by the consumer
  std::atomic<std::uint64_t> wake_{0};
  std::atomic<bool> stop_{false};
  std::atomic<bool> paused_{false};
  std::thread worker_;
  std::atomic<std::uint64_t> ingest_errors_{0};
  std::atomic<std::uint64_t> evicted_total_{0};
  std::atomic<std::uint64_t> cycles_{0};

  mutable std::mutex sink_mutex_;
  EventSink sink_;
};

/// Cells a session reserves against the session budget.
std::int64_t session_reservation_cells(const Runtime& rt, const SessionConfig& config, std::size_t prompt_tokens,
                                       std::size_t header_tokens);

}  // namespace streamkv::session

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "streamkv/pool/radix_cache.hpp"
#include "streamkv/runtime.hpp"
#include "streamkv/sched/planner.hpp"

namespace streamkv::sched {

struct EngineConfig {
  PlannerConfig planner;
  bool speculation = true;
  bool grouping = true;
  bool start_thread = true;  // false: the caller drives step()
};

struct Completion {
  Tokens tokens;
  std::size_t prompt_tokens = 0;
  std::size_t prefill_tokens = 0;   // prompt tokens this request forwarded itself
  std::size_t restored_tokens = 0;  // taken from the prefix cache
  std::size_t aliased_tokens = 0;   // taken from a group leader
  std::size_t drafts_proposed = 0;
  std::size_t drafts_accepted = 0;
};

struct EngineStats {
  std::uint64_t iterations = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed = 0;
  std::uint64_t prefill_tokens = 0;
  std::uint64_t decode_tokens = 0;
  std::uint64_t restored_tokens = 0;
  std::uint64_t aliased_tokens = 0;
  std::uint64_t grouped_followers = 0;
  std::uint64_t deferred_iterations = 0;  // prefill skipped at the high-water mark
  std::uint64_t deferred_chunks = 0;
  std::uint64_t sizing_errors = 0;
  std::uint64_t drafts_proposed = 0;
  std::uint64_t drafts_accepted = 0;
  std::uint64_t radix_evictions = 0;
  std::int64_t peak_used_cells = 0;
  std::int64_t peak_projected_cells = 0;
  std::int64_t budget_cells = 0;
  std::size_t active = 0;
  std::size_t waiting = 0;
};

/// Continuous-batching executor for stateless requests. Each iteration admits
/// waiting requests under the cell budget, prefills in adaptive chunks
/// (grouping identical prefixes), and advances every decoding slot by one
/// greedy token plus any verified prompt-lookup drafts. An iteration is a
/// single POOL batch on the dispatcher.
class BatchEngine {
 public:
  BatchEngine(Runtime& rt, EngineConfig config, pool::RadixCache* radix = nullptr);
  ~BatchEngine();
  BatchEngine(const BatchEngine&) = delete;
  BatchEngine& operator=(const BatchEngine&) = delete;

  std::future<Completion> submit(Tokens prompt, std::size_t max_tokens);
  Completion generate(Tokens prompt, std::size_t max_tokens) { return submit(std::move(prompt), max_tokens).get(); }

  /// Runs one iteration. Returns true while requests remain.
  bool step();
  void run_until_idle();

  EngineStats stats() const;
  const EngineConfig& config() const { return config_; }
  void set_speculation(bool on) { speculation_.store(on); }

 private:
  struct Request {
    std::int64_t id;
    Tokens prompt;
    std::size_t max_tokens;
    std::promise<Completion> done;
  };
  struct Slot {
    std::int64_t id;
    SequenceId seq;
    Tokens prompt;
    std::size_t max_tokens;
    std::size_t cursor = 0;
    bool decoding = false;
    double ema = 1.0;
    std::optional<model::Logits> logits;
    std::int64_t projected = 0;
    Completion out;
    std::promise<Completion> done;
  };

  void iterate();
  void admit_waiting();
  void run_prefill(const IterationPlan& plan);
  void run_decode(const IterationPlan& plan);
  void finish(Slot& s);
  void fail(Slot& s, std::exception_ptr e);
  Slot* find(std::int64_t id);
  void loop();
  bool has_work_locked() const { return !waiting_.empty() || active_count_ > 0; }

  Runtime& rt_;
  const EngineConfig config_;
  pool::RadixCache* radix_;
  std::atomic<bool> speculation_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Request> waiting_;
  std::size_t active_count_ = 0;
  std::int64_t next_id_ = 0;
  bool stop_ = false;
  EngineStats stats_;

  // Touched only inside iterate(), which runs on the dispatch worker.
  std::vector<std::unique_ptr<Slot>> slots_;
  bool progressed_ = false;

  std::thread thread_;
};

}  // namespace streamkv::sched

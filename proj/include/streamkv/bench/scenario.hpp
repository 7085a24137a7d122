// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "streamkv/bench/dataset.hpp"
#include "streamkv/bench/report.hpp"
#include "streamkv/model/tokenizer.hpp"
#include "streamkv/runtime.hpp"

namespace streamkv::bench {

struct QuerySpec {
  std::string id;
  std::string text;
};

/// The fixed query set: trend, pullback, recent high, consolidation, volume
/// and exact value retrieval.
const std::vector<QuerySpec>& default_queries();

enum class Mode { kStateful, kRequestDriven };
const char* to_string(Mode m);

struct ScenarioConfig {
  std::uint64_t seed = 7;
  std::size_t init_samples = 100;
  std::size_t iterations = 15;
  std::size_t samples_per_iter = 55;
  Mode mode = Mode::kStateful;
  std::vector<QuerySpec> queries = default_queries();  // iteration i asks queries[i % size]
  std::string system_prompt = "You are a market data analyst . Answer with one word .";
  int max_tokens = 16;
  bool allow_speculative = true;
  bool register_flash = true;  // register the query set as flash questions
  std::size_t retention_tokens = 16384;
};

/// Runs the streaming scenario in process: initial samples, then per
/// iteration push new samples, wait for ingestion and time one query.
/// Stateful mode keeps one session; request-driven mode sends the whole
/// accumulated context with every query through the stateless path, with the
/// prefix and response caches off.
LatencyReport run_scenario(Runtime& rt, const ScenarioConfig& config);

/// Renders a request-driven prompt: system prompt, every record, then the query.
std::string replay_prompt(const std::string& system_prompt, const std::vector<OhlcvRecord>& records,
                          std::size_t count, const std::string& query);

/// Token form of replay_prompt. Each record is tokenized on its own, exactly
/// as a session ingests it, so both modes see the same context tokens.
Tokens replay_tokens(const model::Tokenizer& tokenizer, const std::string& system_prompt,
                     const std::vector<OhlcvRecord>& records, std::size_t count, const std::string& query);

}  // namespace streamkv::bench

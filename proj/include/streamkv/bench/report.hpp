// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace streamkv::bench {

struct IterationRow {
  int iteration = 0;
  std::string mode;
  std::string query_id;
  std::string path;
  double wall_ms = 0.0;
  std::uint64_t session_tokens = 0;  // SESSION-cause tokens for this query
  std::uint64_t pool_tokens = 0;     // POOL-cause tokens for this query
  std::uint64_t stream_tokens = 0;   // STREAM-cause tokens since the previous row
  std::uint64_t flash_tokens = 0;    // FLASH-cause tokens since the previous row
  std::uint64_t context_tokens = 0;
  std::uint64_t query_tokens = 0;
  std::uint64_t generated = 0;
  std::string answer;

  friend bool operator==(const IterationRow&, const IterationRow&) = default;
};

struct Summary {
  std::size_t count = 0;
  double avg = 0, stddev = 0, min = 0, max = 0;
};

struct LatencyReport {
  std::vector<IterationRow> rows;
  bool valid = true;  // false when the run aborted part way
  std::string note;

  Summary wall_summary() const;
  friend bool operator==(const LatencyReport&, const LatencyReport&) = default;
};

/// Population statistics; zeros for an empty input.
Summary summarize(const std::vector<double>& values);

/// CSV with a header row. A trailing "# valid=0 ..." comment marks an
/// aborted run.
std::string to_csv(const LatencyReport& report);
LatencyReport parse_csv(const std::string& text);

/// Human-readable table: per-row values then avg/std/min/max of wall time.
std::string format_summary(const LatencyReport& report);

}  // namespace streamkv::bench

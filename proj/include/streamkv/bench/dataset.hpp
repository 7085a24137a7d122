// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace streamkv::bench {

enum class Phase { kUptrend, kCorrection, kConsolidation };
const char* to_string(Phase p);

struct OhlcvRecord {
  int open = 0;
  int high = 0;
  int low = 0;
  int close = 0;
  int volume = 0;
  Phase phase = Phase::kUptrend;

  /// "O 45 H 47 L 44 C 46 V 23"
  std::string text() const;
  friend bool operator==(const OhlcvRecord&, const OhlcvRecord&) = default;
};

/// Price and volume bounds; two-digit values keep every record lossless in
/// the tokenizer's record form.
inline constexpr int kMinValue = 10;
inline constexpr int kMaxValue = 99;

/// Deterministic synthetic bars cycling uptrend -> correction ->
/// consolidation. Uptrend: each high above the previous high, lows not lower.
/// Correction: each close below the previous close. Consolidation: highs and
/// lows stay within 4 of the phase's opening close.
std::vector<OhlcvRecord> gen_dataset(std::uint64_t seed, std::size_t n);

}  // namespace streamkv::bench

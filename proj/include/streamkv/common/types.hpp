// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace streamkv {

using TokenId = std::int32_t;
using Position = std::int64_t;
using Tokens = std::vector<TokenId>;

// Priority classes double as the forward-cost attribution cause. Lower value
// runs first.
enum class Priority : std::uint8_t { kFlash = 0, kSession = 1, kPool = 2, kStream = 3 };
inline constexpr std::size_t kNumPriorities = 4;
inline constexpr std::array<Priority, kNumPriorities> kAllPriorities = {
    Priority::kFlash, Priority::kSession, Priority::kPool, Priority::kStream};

constexpr std::string_view to_string(Priority p) {
  switch (p) {
    case Priority::kFlash: return "FLASH";
    case Priority::kSession: return "SESSION";
    case Priority::kPool: return "POOL";
    case Priority::kStream: return "STREAM";
  }
  return "?";
}

// Context regions of a session sequence. Ordering within a sequence:
// FROZEN < SLIDING < EPHEMERAL by position.
enum class RegionTag : std::uint8_t { kFrozen = 0, kSliding = 1, kEphemeral = 2 };

enum class SequenceKind : std::uint8_t { kTransient, kSession, kPrefixDonor };

struct SequenceId {
  std::int32_t id = -1;
  SequenceKind kind = SequenceKind::kTransient;

  bool valid() const { return id >= 0; }
  friend bool operator==(const SequenceId& a, const SequenceId& b) { return a.id == b.id; }
};

}  // namespace streamkv

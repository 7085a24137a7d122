// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace streamkv {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Incremental 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= kFnvPrime;
    }
  }

  // Little-endian regardless of host order.
  void update_u32(std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    update(b, 4);
  }

  void update_u64(std::uint64_t v) {
    update_u32(static_cast<std::uint32_t>(v));
    update_u32(static_cast<std::uint32_t>(v >> 32));
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = kFnvOffsetBasis;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.update(s.data(), s.size());
  return h.value();
}

/// FNV-1a over token ids, each serialized as 4-byte little-endian.
inline std::uint64_t fnv1a_tokens(std::span<const std::int32_t> tokens) {
  Fnv1a h;
  for (auto t : tokens) h.update_u32(static_cast<std::uint32_t>(t));
  return h.value();
}

}  // namespace streamkv

// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamkv/common/types.hpp"

namespace streamkv::model {

// Fixed ids of the reserved vocabulary.
namespace vocab {
inline constexpr TokenId kEos = 0;
inline constexpr TokenId kSep = 1;
inline constexpr TokenId kUp = 2;
inline constexpr TokenId kDown = 3;
inline constexpr TokenId kYes = 4;
inline constexpr TokenId kNo = 5;
inline constexpr TokenId kAnswer = 6;
inline constexpr TokenId kOpen = 7;
inline constexpr TokenId kHigh = 8;
inline constexpr TokenId kLow = 9;
inline constexpr TokenId kClose = 10;
inline constexpr TokenId kVolume = 11;
inline constexpr TokenId kDigit0 = 12;  // digits 0..9 are contiguous
inline constexpr TokenId kColon = 22;
inline constexpr TokenId kQuestion = 23;
inline constexpr TokenId kComma = 24;
inline constexpr TokenId kPeriod = 25;
inline constexpr TokenId kByte0 = 26;  // 256 byte-fallback tokens
inline constexpr TokenId kFirstWord = kByte0 + 256;
inline constexpr int kMinVocab = kFirstWord;
}  // namespace vocab

/// Word-level tokenizer with a reserved vocabulary, single-token digits and
/// per-byte fallback for unknown words.
///
/// Text matching the record grammar `O <n> H <n> L <n> C <n> V <n>` is encoded
/// in record form: each field marker followed by exactly two digit tokens
/// (value mod 100, zero padded) and a trailing separator, 16 tokens total.
class Tokenizer {
 public:
  explicit Tokenizer(int vocab_size);

  Tokens tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> tokens) const;
  std::string detokenize(TokenId token) const { return detokenize(std::span<const TokenId>(&token, 1)); }

  std::optional<TokenId> lookup(std::string_view word) const;
  int vocab_size() const { return vocab_size_; }
  const std::string& piece(TokenId id) const { return pieces_.at(static_cast<std::size_t>(id)); }

  static bool is_digit(TokenId t) { return t >= vocab::kDigit0 && t < vocab::kDigit0 + 10; }
  static bool is_byte(TokenId t) { return t >= vocab::kByte0 && t < vocab::kFirstWord; }

 private:
  bool try_record_form(std::string_view text, Tokens& out) const;

  int vocab_size_;
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace streamkv::model

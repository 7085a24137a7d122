// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/model/tokenizer.hpp"

#include <algorithm>
#include <cctype>

#include "streamkv/common/error.hpp"

namespace streamkv::model {

namespace {

constexpr const char* kWordList[] = {
    "the", "is", "a", "an", "of", "to", "in", "on", "and", "or", "not", "what", "which", "when", "where",
    "how", "why", "was", "were", "are", "be", "been", "has", "have", "had", "do", "does", "did", "it", "this",
    "that", "there", "these", "those", "with", "for", "from", "by", "at", "as", "if", "then", "than", "any",
    "current", "trend", "price", "prices", "market", "bar", "bars", "recent", "latest", "last", "new",
    "high", "low", "open", "close", "volume", "pullback", "correction", "consolidation", "rising", "falling",
    "up", "down", "yes", "no", "value", "signal", "confirmed", "data", "sample", "samples", "record",
    "records", "you", "your", "are", "analyst", "analyze", "stream", "streaming", "answer", "question",
    "one", "word", "only", "respond", "reply", "with", "ohlcv", "candle", "candles", "hourly", "equity",
    "range", "sideways", "higher", "lower", "highs", "lows", "move", "moving", "average", "level",
    "support", "resistance", "breakout", "direction", "strong", "weak", "increasing", "decreasing",
    "detect", "detection", "pattern", "number", "exact", "retrieve", "state", "given", "following",
    "system", "user", "assistant", "hello", "world", "please", "tell", "me", "about", "summary",
    "summarize", "will", "would", "should", "can", "could", "next", "previous", "period", "time",
    "today", "now", "still", "again", "over", "under", "between", "above", "below", "into", "out",
    "all", "some", "many", "more", "most", "less", "least", "each", "every", "same", "other", "first",
    "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth", "make", "made",
    "made", "see", "seen", "show", "shows", "report", "status", "check", "list", "count", "total",
    "per", "rate", "change", "changes", "since", "until", "while", "during", "after", "before",
};

bool is_word_byte(unsigned char c) { return std::isalpha(c) != 0 || c >= 0x80 || c == '_' || c == '\''; }

std::optional<TokenId> punct_token(char c) {
  switch (c) {
    case ':': return vocab::kColon;
    case '?': return vocab::kQuestion;
    case ',': return vocab::kComma;
    case '.': return vocab::kPeriod;
    default: return std::nullopt;
  }
}

bool parse_uint(std::string_view s, std::uint64_t& out) {
  if (s.empty() || s.size() > 18) return false;
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return true;
}

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Tokenizer::Tokenizer(int vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < vocab::kMinVocab) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocab_size " + std::to_string(vocab_size) + " below reserved size " + std::to_string(vocab::kMinVocab));
  }
  pieces_.resize(static_cast<std::size_t>(vocab_size));
  pieces_[vocab::kEos] = "<eos>";
  pieces_[vocab::kSep] = "<sep>";
  pieces_[vocab::kUp] = "UP";
  pieces_[vocab::kDown] = "DOWN";
  pieces_[vocab::kYes] = "YES";
  pieces_[vocab::kNo] = "NO";
  pieces_[vocab::kAnswer] = "ANSWER";
  pieces_[vocab::kOpen] = "O";
  pieces_[vocab::kHigh] = "H";
  pieces_[vocab::kLow] = "L";
  pieces_[vocab::kClose] = "C";
  pieces_[vocab::kVolume] = "V";
  for (int d = 0; d < 10; ++d) pieces_[static_cast<std::size_t>(vocab::kDigit0 + d)] = std::string(1, char('0' + d));
  pieces_[vocab::kColon] = ":";
  pieces_[vocab::kQuestion] = "?";
  pieces_[vocab::kComma] = ",";
  pieces_[vocab::kPeriod] = ".";
  for (int b = 0; b < 256; ++b) pieces_[static_cast<std::size_t>(vocab::kByte0 + b)] = std::string(1, char(b));

  for (TokenId id = 0; id < vocab::kByte0; ++id) index_.emplace(pieces_[static_cast<std::size_t>(id)], id);

  TokenId next = vocab::kFirstWord;
  for (const char* w : kWordList) {
    if (next >= vocab_size) break;
    if (index_.contains(w)) continue;
    pieces_[static_cast<std::size_t>(next)] = w;
    index_.emplace(w, next);
    ++next;
  }
  // Unused tail ids keep a distinct placeholder so detokenize stays total.
  for (TokenId id = next; id < vocab_size; ++id) pieces_[static_cast<std::size_t>(id)] = "<unused" + std::to_string(id) + ">";
}

std::optional<TokenId> Tokenizer::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Tokenizer::try_record_form(std::string_view text, Tokens& out) const {
  static constexpr std::string_view kMarkers[] = {"O", "H", "L", "C", "V"};
  static constexpr TokenId kMarkerIds[] = {vocab::kOpen, vocab::kHigh, vocab::kLow, vocab::kClose, vocab::kVolume};
  auto words = split_ws(text);
  if (words.size() != 10) return false;
  std::uint64_t values[5];
  for (int f = 0; f < 5; ++f) {
    if (words[static_cast<std::size_t>(2 * f)] != kMarkers[f]) return false;
    if (!parse_uint(words[static_cast<std::size_t>(2 * f + 1)], values[f])) return false;
  }
  for (int f = 0; f < 5; ++f) {
    const auto v = values[f] % 100;
    out.push_back(kMarkerIds[f]);
    out.push_back(vocab::kDigit0 + static_cast<TokenId>(v / 10));
    out.push_back(vocab::kDigit0 + static_cast<TokenId>(v % 10));
  }
  out.push_back(vocab::kSep);
  return true;
}

Tokens Tokenizer::tokenize(std::string_view text) const {
  Tokens out;
  if (try_record_form(text, out)) return out;

  bool prev_fallback = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (std::isdigit(c)) {
      out.push_back(vocab::kDigit0 + (c - '0'));
      prev_fallback = false;
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      const std::string word(text.substr(i, j - i));
      std::optional<TokenId> id = lookup(word);
      if (!id) {
        std::string lower = word;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        id = lookup(lower);
        // Reserved uppercase words never match through case folding.
        if (id && *id < vocab::kByte0) id.reset();
      }
      if (id) {
        out.push_back(*id);
        prev_fallback = false;
      } else {
        if (prev_fallback) out.push_back(vocab::kByte0 + ' ');
        for (unsigned char b : word) out.push_back(vocab::kByte0 + b);
        prev_fallback = true;
      }
      i = j;
      continue;
    }
    if (auto p = punct_token(static_cast<char>(c))) {
      out.push_back(*p);
    } else {
      out.push_back(vocab::kByte0 + c);
    }
    prev_fallback = false;
    ++i;
  }
  return out;
}

std::string Tokenizer::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  enum class Prev { kNone, kWord, kDigit, kByte };
  Prev prev = Prev::kNone;
  for (TokenId t : tokens) {
    if (t < 0 || t >= vocab_size_) throw Error(ErrorCode::kInvalidArgument, "token id out of range");
    if (t == vocab::kEos) continue;
    if (t == vocab::kSep) {
      out += '\n';
      prev = Prev::kNone;
      continue;
    }
    if (t == vocab::kColon || t == vocab::kQuestion || t == vocab::kComma || t == vocab::kPeriod) {
      out += pieces_[static_cast<std::size_t>(t)];
      prev = Prev::kWord;
      continue;
    }
    Prev kind = is_digit(t) ? Prev::kDigit : is_byte(t) ? Prev::kByte : Prev::kWord;
    const bool glue = (kind == prev && kind != Prev::kWord);
    if (!glue && prev != Prev::kNone && !out.empty() && out.back() != '\n') out += ' ';
    out += pieces_[static_cast<std::size_t>(t)];
    prev = kind;
  }
  return out;
}

}  // namespace streamkv::model

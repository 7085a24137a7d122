// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace streamkv {

enum class ErrorCode {
  kInvalidArgument,
  kPoolExhausted,
  kUnknownSequence,
  kUnknownSession,
  kInsufficientSliding,
  kLengthOverflow,
  kQuotaExceeded,
  kRegistryFull,
  kTimeout,
  kShutdown,
  kSizing,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kPoolExhausted: return "pool_exhausted";
    case ErrorCode::kUnknownSequence: return "unknown_sequence";
    case ErrorCode::kUnknownSession: return "unknown_session";
    case ErrorCode::kInsufficientSliding: return "insufficient_sliding";
    case ErrorCode::kLengthOverflow: return "length_overflow";
    case ErrorCode::kQuotaExceeded: return "quota_exceeded";
    case ErrorCode::kRegistryFull: return "registry_full";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kShutdown: return "shutdown";
    case ErrorCode::kSizing: return "sizing";
  }
  return "unknown";
}

}  // namespace streamkv

// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyurn {

enum class ErrorCode {
  MalformedSpec,
  NotBalancedInExpectation,
  NonpositiveB,
  TenabilityViolation,
  IllConditioned,
  DominantMismatch,
  NotSimple,
  TooFewSurvivors,
  ResidualTooLarge,
  InsufficientRange,
  StateSpaceTooLarge,
  InvalidParams,
  ClosureBudgetExceeded,
  NonpositiveWeight,
  UsageError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedSpec: return "MalformedSpec";
    case ErrorCode::NotBalancedInExpectation: return "NotBalancedInExpectation";
    case ErrorCode::NonpositiveB: return "NonpositiveB";
    case ErrorCode::TenabilityViolation: return "TenabilityViolation";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::DominantMismatch: return "DominantMismatch";
    case ErrorCode::NotSimple: return "NotSimple";
    case ErrorCode::TooFewSurvivors: return "TooFewSurvivors";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::InsufficientRange: return "InsufficientRange";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ClosureBudgetExceeded: return "ClosureBudgetExceeded";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace polyurn

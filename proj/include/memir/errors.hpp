#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace memir {

enum class ErrorCode {
  DanglingReference,
  SupportViolation,
  DuplicateId,
  NotAClaim,
  UnknownId,
  InvalidAtom,
  CorruptRecord,
  VersionMismatch,
  EmptyHistory,
  ProviderFailure,
  ParseError,
  EmbedderDimensionMismatch,
  MixedRoutes,
  UnknownRoute,
  ScorerFailure,
  UnresolvedGoldId,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NotAClaim: return "NotAClaim";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::InvalidAtom: return "InvalidAtom";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmbedderDimensionMismatch: return "EmbedderDimensionMismatch";
    case ErrorCode::MixedRoutes: return "MixedRoutes";
    case ErrorCode::UnknownRoute: return "UnknownRoute";
    case ErrorCode::ScorerFailure: return "ScorerFailure";
    case ErrorCode::UnresolvedGoldId: return "UnresolvedGoldId";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

// Single exception type for the whole engine; the code carries the
// machine-checkable category, the message the human-readable detail.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace memir

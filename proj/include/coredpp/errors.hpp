#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coredpp {

enum class ErrorCode {
  InvalidArgument,
  NotPSD,
  InvalidBandwidth,
  KOutOfRange,
  IndexOutOfRange,
  DuplicateIndex,
  SingularPivot,
  NegativeRadicand,
  DegenerateModel,
  WrongCardinality,
  TooManyParts,
  EnumerationTooLarge,
  DegenerateConditional,
  InsufficientChains,
  NotConverged,
  IoError,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::InvalidBandwidth: return "InvalidBandwidth";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::SingularPivot: return "SingularPivot";
    case ErrorCode::NegativeRadicand: return "NegativeRadicand";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::WrongCardinality: return "WrongCardinality";
    case ErrorCode::TooManyParts: return "TooManyParts";
    case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::DegenerateConditional: return "DegenerateConditional";
    case ErrorCode::InsufficientChains: return "InsufficientChains";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace coredpp

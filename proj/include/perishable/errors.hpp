#pragma once

#include <stdexcept>
#include <string>

namespace perishable {

enum class ErrorCode {
  kEmptyInstance,
  kInvalidBid,
  kInvalidConfig,
  kParseError,
  kInvariantViolation,
  kNotSublinear,
  kTooFewBidders,
  kDegenerateBelowFirstPeak,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInstance: return "EmptyInstance";
    case ErrorCode::kInvalidBid: return "InvalidBid";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kNotSublinear: return "NotSublinear";
    case ErrorCode::kTooFewBidders: return "TooFewBidders";
    case ErrorCode::kDegenerateBelowFirstPeak: return "DegenerateBelowFirstPeak";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace perishable

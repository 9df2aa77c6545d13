#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace brw {

enum class ErrorCode {
  InvalidLaw,
  EmptySupport,
  SubcriticalModel,
  NonZeroMean,
  NotSchroeder,
  DegenerateBoundary,
  OutOfRange,
  AtomRequired,
  EmptyFeasible,
  NoRoot,
  RequiresBoettcher,
  InsufficientTail,
  HypothesisViolated,
  ConfigError,
  GridOverflow,
  CapExceeded,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidLaw: return "InvalidLaw";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::SubcriticalModel: return "SubcriticalModel";
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::NotSchroeder: return "NotSchroeder";
    case ErrorCode::DegenerateBoundary: return "DegenerateBoundary";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::AtomRequired: return "AtomRequired";
    case ErrorCode::EmptyFeasible: return "EmptyFeasible";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::RequiresBoettcher: return "RequiresBoettcher";
    case ErrorCode::InsufficientTail: return "InsufficientTail";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::GridOverflow: return "GridOverflow";
    case ErrorCode::CapExceeded: return "CapExceeded";
  }
  return "Unknown";
}

/// Resource exhaustion, as opposed to a rejected model or argument.
constexpr bool is_resource_error(ErrorCode code) {
  return code == ErrorCode::GridOverflow || code == ErrorCode::CapExceeded;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace brw

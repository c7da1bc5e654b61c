#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cia {

enum class ErrorCode {
  kInvalidArgument,
  kDuplicateBang,
  kNegativeWeight,
  kNotExtremal,
  kOutsideHull,
  kUnsupportedSpec,
  kBadGamma,
  kInfeasible,
  kIterationLimit,
  kTooFine,
  kDomainMismatch,
  kDiverged,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. `index()` is set for errors
/// that refer to a particular bang (e.g. NotExtremal).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<int> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<int> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<int> index_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDuplicateBang: return "DuplicateBang";
    case ErrorCode::kNegativeWeight: return "NegativeWeight";
    case ErrorCode::kNotExtremal: return "NotExtremal";
    case ErrorCode::kOutsideHull: return "OutsideHull";
    case ErrorCode::kUnsupportedSpec: return "UnsupportedSpec";
    case ErrorCode::kBadGamma: return "BadGamma";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kIterationLimit: return "IterationLimit";
    case ErrorCode::kTooFine: return "TooFine";
    case ErrorCode::kDomainMismatch: return "DomainMismatch";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cia

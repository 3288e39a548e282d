#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fluxctl {

enum class ErrorCode {
  kInvalidInput,
  kDimensionMismatch,
  kGoalUncontrollable,
  kRequiresControllability,
  kInfeasibleGoal,
  kVarianceUndefined,
  kUnreachableState,
  kDivergence,
  kParse,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and is what the CLI serializes into error.json.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a quadratic goal cannot be met; carries the smallest
/// threshold that is attainable under the current schematic.
class InfeasibleGoal : public Error {
 public:
  InfeasibleGoal(const std::string& message, double min_eta)
      : Error(ErrorCode::kInfeasibleGoal, message), min_eta_(min_eta) {}

  double min_eta() const noexcept { return min_eta_; }

 private:
  double min_eta_;
};

/// Raised by the simulator when the state stops being finite.
class Divergence : public Error {
 public:
  Divergence(const std::string& message, double last_valid_time)
      : Error(ErrorCode::kDivergence, message),
        last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace fluxctl

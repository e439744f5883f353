#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrchain {

enum class ErrorCode {
  NoCrossing,
  InfeasibleBranch,
  DegenerateSegment,
  NonDifferentiable,
  MeanMismatch,
  SingularSystem,
  BudgetExhausted,
  NotInMinimizerSet,
  NoConvergence,
  UnclassifiedSegment,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::InfeasibleBranch: return "InfeasibleBranch";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::NonDifferentiable: return "NonDifferentiable";
    case ErrorCode::MeanMismatch: return "MeanMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::NotInMinimizerSet: return "NotInMinimizerSet";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnclassifiedSegment: return "UnclassifiedSegment";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Base class for every failure raised by the library. The code is stable and
/// is what the CLI maps onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lrchain

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace degctl {

enum class ErrorCode {
  InvalidParameter,
  NonPositiveInterior,
  BadTable,
  InconclusiveIntegrability,
  TooFewCells,
  GridMismatch,
  EmptyTrace,
  ConvergenceFailure,
  NegativeTarget,
  DegenerateTarget,
  NotNonnegative,
  ZeroInitialState,
  NonpositiveOverlap,
  NonpositiveGap,
  ZeroHorizon,
  GroundModeMismatch,
  StepTooLarge,
  SolverBreakdown,
  BadInsolationFile,
  BadScenario,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NonPositiveInterior: return "NonPositiveInterior";
    case ErrorCode::BadTable: return "BadTable";
    case ErrorCode::InconclusiveIntegrability: return "InconclusiveIntegrability";
    case ErrorCode::TooFewCells: return "TooFewCells";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::NegativeTarget: return "NegativeTarget";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::NotNonnegative: return "NotNonnegative";
    case ErrorCode::ZeroInitialState: return "ZeroInitialState";
    case ErrorCode::NonpositiveOverlap: return "NonpositiveOverlap";
    case ErrorCode::NonpositiveGap: return "NonpositiveGap";
    case ErrorCode::ZeroHorizon: return "ZeroHorizon";
    case ErrorCode::GroundModeMismatch: return "GroundModeMismatch";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::SolverBreakdown: return "SolverBreakdown";
    case ErrorCode::BadInsolationFile: return "BadInsolationFile";
    case ErrorCode::BadScenario: return "BadScenario";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI's exit diagnostics) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace degctl

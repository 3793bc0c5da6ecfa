#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scmb {

enum class ErrorCode {
  InvalidArgument,
  SchemaError,
  ValidationError,
  CardinalityOverflow,
  NonSurjective,
  NotMarkovian,
  NotQuasiMarkovian,
  Infeasible,
  VertexBudgetExceeded,
  BudgetExceeded,
  EmptyDataset,
  CompatibilityFailure,
  NonConvergent,
  InvalidEpsilon,
  CaseMismatch,
  DegenerateSample,
  Unreachable,
  DegenerateTruth,
};

std::string_view toString(ErrorCode code);

// All library failures are reported through this exception; `code()` lets
// callers branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(toString(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scmb

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qfi {

enum class ErrorCode {
  SingularMetric,
  DimensionMismatch,
  DerivativeOrderExceeded,
  MixedMetric,
  UnknownFamily,
  ConditionViolated,
  UncertifiedSymmetry,
  ZeroLambda,
  NonzeroPotential,
  OutOfDomain,
  NonIntegrable,
  InfeasibleEnergy,
  NullDirectionRequired,
  StepSizeUnderflow,
  NonConvergent,
  BranchInfeasible,
  DegenerateParams,
  BadConfig,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qfi

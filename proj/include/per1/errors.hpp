#pragma once

#include <stdexcept>
#include <string>

namespace per1 {

enum class ErrorCode {
  DegenerateParameter,
  BudgetExceeded,
  WindowTooLarge,
  NotEscaping,
  BranchAmbiguity,
  NotInHInfinity,
  SeedEscapedQuadrant,
  NotInBasin,
  InverseBranchLost,
  NotApplicable,
  SideUndecided,
  OrbitBudget,
  NotAdjacent,
  WrongDepth,
  RayHitsCriticalValue,
  ContinuationStalled,
  RayCrash,
  ObstructedInternalRay,
  ArrangementDegenerate,
  NotALandingVertex,
  MissingComponentData,
  InvalidArgument,
};

const char* error_name(ErrorCode c);

// Every recoverable failure in the library is a DomainError; the CLI maps it to
// exit code 1 and a JSON record on stderr.
class DomainError : public std::runtime_error {
 public:
  DomainError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  const char* name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) {
  throw DomainError(c, msg);
}

}  // namespace per1

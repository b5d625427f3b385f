#pragma once

#include <stdexcept>
#include <string>

namespace smpc {

enum class ErrorKind {
  NotPositiveDefinite,
  NoConvergence,
  UnstableScaledSystem,
  Unstabilizable,
  DegenerateFacet,
  Unbounded,
  RhoBelowFloor,
  InvalidEpsilon,
  ValidationFailed,
  RadiusBelowRho,
  DesignInvalid,
  InfeasibleAtStart,
  SolverFailure,
  NumericalBreakdown,
  InvalidArgument,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace smpc

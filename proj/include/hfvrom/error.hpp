#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hfvrom {

enum class ErrorKind {
  kInvalidArgument,
  kMalformedMesh,
  kDegenerateElement,
  kNumericalBlowup,
  kSolverFailure,
  kDegenerateSnapshots,
  kIllConditionedBasis,
  kDivisionGuard,
  kConfigError,
  kIoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kMalformedMesh: return "malformed-mesh";
    case ErrorKind::kDegenerateElement: return "degenerate-element";
    case ErrorKind::kNumericalBlowup: return "numerical-blowup";
    case ErrorKind::kSolverFailure: return "solver-failure";
    case ErrorKind::kDegenerateSnapshots: return "degenerate-snapshots";
    case ErrorKind::kIllConditionedBasis: return "ill-conditioned-basis";
    case ErrorKind::kDivisionGuard: return "division-guard";
    case ErrorKind::kConfigError: return "config-error";
    case ErrorKind::kIoError: return "io-error";
  }
  return "unknown";
}

/// Numerical failures (as opposed to bad input) map to CLI exit code 2.
constexpr bool is_numerical(ErrorKind kind) {
  return kind == ErrorKind::kNumericalBlowup || kind == ErrorKind::kSolverFailure ||
         kind == ErrorKind::kDegenerateSnapshots || kind == ErrorKind::kIllConditionedBasis ||
         kind == ErrorKind::kDegenerateElement;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace hfvrom

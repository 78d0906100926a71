#pragma once

#include <stdexcept>
#include <string>

namespace lagflow {

enum class ErrorCode {
  invalid_argument,
  order_too_high,
  diffeo_violation,
  no_convergence,
  singular_jacobian,
  guard_violation,
  empty_ensemble,
  config_invalid,
  missing_artifact,
  unknown_suite,
  run_failed,
  io_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::order_too_high: return "order-too-high";
    case ErrorCode::diffeo_violation: return "diffeo-violation";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::singular_jacobian: return "singular-jacobian";
    case ErrorCode::guard_violation: return "guard-violation";
    case ErrorCode::empty_ensemble: return "empty-ensemble";
    case ErrorCode::config_invalid: return "config-invalid";
    case ErrorCode::missing_artifact: return "missing-artifact";
    case ErrorCode::unknown_suite: return "unknown-suite";
    case ErrorCode::run_failed: return "run-failed";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

/// Exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace lagflow

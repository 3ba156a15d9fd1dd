#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace infradep {

enum class ErrorCode {
  InvalidParam,
  InvalidArg,
  InvalidModel,
  GuardViolation,
  OutOfDomain,
  StateLimit,
  ImmediateCycle,
  NotErgodic,
  NoConvergence,
  UnreachableTarget,
  EventCapExceeded,
  UnknownLabel,
  NotAttackModel,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParam: return "INVALID_PARAM";
    case ErrorCode::InvalidArg: return "INVALID_ARG";
    case ErrorCode::InvalidModel: return "INVALID_MODEL";
    case ErrorCode::GuardViolation: return "GUARD_VIOLATION";
    case ErrorCode::OutOfDomain: return "OUT_OF_DOMAIN";
    case ErrorCode::StateLimit: return "STATE_LIMIT";
    case ErrorCode::ImmediateCycle: return "IMMEDIATE_CYCLE";
    case ErrorCode::NotErgodic: return "NOT_ERGODIC";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::UnreachableTarget: return "UNREACHABLE_TARGET";
    case ErrorCode::EventCapExceeded: return "EVENT_CAP_EXCEEDED";
    case ErrorCode::UnknownLabel: return "UNKNOWN_LABEL";
    case ErrorCode::NotAttackModel: return "NOT_ATTACK_MODEL";
  }
  return "UNKNOWN";
}

/// Base exception for every failure raised by the engine. The code is the
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace infradep

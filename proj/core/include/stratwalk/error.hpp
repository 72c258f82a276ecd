#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stratwalk {

enum class ErrorCode {
  PrecisionExhausted,
  RationalInput,
  Overflow,
  DepthExceeded,
  TruncationTooDeep,
  HorizonExceeded,
  RealizabilityError,
  HypothesisViolation,
  WrongKind,
  SmallDivisorBlowup,
  NotCentered,
  InvalidConfig,
  NumericRange,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a code and the module that
/// raised it, so that the CLI can report provenance.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string_view module, const std::string& what)
      : std::runtime_error(std::string(module) + ": " + std::string(to_string(code)) + ": " + what),
        code_(code),
        module_(module) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace stratwalk

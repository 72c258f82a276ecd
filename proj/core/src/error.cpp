#include "stratwalk/error.hpp"

namespace stratwalk {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::RationalInput: return "RationalInput";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::TruncationTooDeep: return "TruncationTooDeep";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::RealizabilityError: return "RealizabilityError";
    case ErrorCode::HypothesisViolation: return "HypothesisViolation";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::SmallDivisorBlowup: return "SmallDivisorBlowup";
    case ErrorCode::NotCentered: return "NotCentered";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NumericRange: return "NumericRange";
  }
  return "Unknown";
}

}  // namespace stratwalk

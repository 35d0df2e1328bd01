#include "numax/error.hpp"

namespace numax {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::DegenerateCase: return "DegenerateCase";
    case Errc::NonnegativityViolation: return "NonnegativityViolation";
    case Errc::EvaluationFailure: return "EvaluationFailure";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::OrientationFlip: return "OrientationFlip";
    case Errc::DomainError: return "DomainError";
    case Errc::NonCompliantUtility: return "NonCompliantUtility";
    case Errc::MaxIterations: return "MaxIterations";
    case Errc::AllZeroChannels: return "AllZeroChannels";
    case Errc::TooLarge: return "TooLarge";
    case Errc::SolverFailure: return "SolverFailure";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace numax

#include "exchopt/errors.hpp"

namespace exchopt {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::DegenerateDiffusion: return "DegenerateDiffusion";
    case ErrorCode::InvalidCorrelation: return "InvalidCorrelation";
    case ErrorCode::NonPositiveStrike: return "NonPositiveStrike";
    case ErrorCode::NegativeIntensity: return "NegativeIntensity";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::FlaggedOverflow: return "FlaggedOverflow";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::BracketNotFound: return "BracketNotFound";
    case ErrorCode::NoBoundaryRoot: return "NoBoundaryRoot";
    case ErrorCode::NoRootInInterval: return "NoRootInInterval";
    case ErrorCode::UnsupportedJumpLaw: return "UnsupportedJumpLaw";
    case ErrorCode::SingularRegression: return "SingularRegression";
    case ErrorCode::BoundaryGap: return "BoundaryGap";
    case ErrorCode::MalformedInput: return "MalformedInput";
    }
    return "Unknown";
}

} // namespace exchopt

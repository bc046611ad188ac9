#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exchopt {

enum class ErrorCode {
    DegenerateDiffusion,
    InvalidCorrelation,
    NonPositiveStrike,
    NegativeIntensity,
    InvalidParameter,
    FlaggedOverflow,
    QuadratureNotConverged,
    BracketNotFound,
    NoBoundaryRoot,
    NoRootInInterval,
    UnsupportedJumpLaw,
    SingularRegression,
    BoundaryGap,
    MalformedInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library failure tagged with an ErrorCode.
class PricingError : public std::runtime_error {
public:
    PricingError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw PricingError(code, what);
}

} // namespace exchopt

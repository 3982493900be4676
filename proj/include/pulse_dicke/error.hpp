#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pulse_dicke {

enum class ErrorCode {
    InvalidArgument,
    NormDrift,
    TruncationOverflow,
    SpaceMismatch,
    NotAState,
    PositivityLoss,
    TraceDrift,
    NoMinimum,
    IoFailure,
    Rejected,
    UsageError,
    Conflict,
};

inline constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::NormDrift: return "NORM_DRIFT";
        case ErrorCode::TruncationOverflow: return "TRUNCATION_OVERFLOW";
        case ErrorCode::SpaceMismatch: return "SPACE_MISMATCH";
        case ErrorCode::NotAState: return "NOT_A_STATE";
        case ErrorCode::PositivityLoss: return "POSITIVITY_LOSS";
        case ErrorCode::TraceDrift: return "TRACE_DRIFT";
        case ErrorCode::NoMinimum: return "NO_MINIMUM";
        case ErrorCode::IoFailure: return "IO_FAILURE";
        case ErrorCode::Rejected: return "REJECTED";
        case ErrorCode::UsageError: return "USAGE_ERROR";
        case ErrorCode::Conflict: return "CONFLICT";
    }
    return "UNKNOWN";
}

// Every failure raised by the library carries one of the codes above so that
// sweeps can stamp it onto FAILED records and the CLI can map it to an exit
// status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pulse_dicke

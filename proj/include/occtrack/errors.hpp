#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace occtrack {

enum class ErrorCode {
    PatchOutOfFrame,
    PatchTooSmall,
    NeedsColor,
    ShapeMismatch,
    NumericalBlowup,
    DegenerateResponse,
    DegenerateQuality,
    InitFailed,
    BadSpec,
    ParseError,
    IoError,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::PatchOutOfFrame: return "PatchOutOfFrame";
    case ErrorCode::PatchTooSmall: return "PatchTooSmall";
    case ErrorCode::NeedsColor: return "NeedsColor";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::DegenerateResponse: return "DegenerateResponse";
    case ErrorCode::DegenerateQuality: return "DegenerateQuality";
    case ErrorCode::InitFailed: return "InitFailed";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace occtrack

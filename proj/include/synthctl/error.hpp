#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthctl {

enum class ErrorCode {
    MissingCell,
    UnknownTreated,
    BadT0,
    ParseError,
    Overflow,
    DimensionMismatch,
    SingularGram,
    SingularMatrix,
    EmptyPost,
    BadProb,
    BadConfig,
    StudyFailed,
    IoNotFound,
    IoError,
    BadLevel,
    InvalidArgument,
};

/// Stable, machine-parseable name for an error code (e.g. "MISSING_CELL").
std::string_view code_name(ErrorCode code) noexcept;

/// The single exception type thrown by the library. Carries a code so the
/// CLI can map failures to exit codes and one-line diagnostics.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace synthctl

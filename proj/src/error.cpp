#include "synthctl/error.hpp"

namespace synthctl {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingCell: return "MISSING_CELL";
        case ErrorCode::UnknownTreated: return "UNKNOWN_TREATED";
        case ErrorCode::BadT0: return "BAD_T0";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::Overflow: return "OVERFLOW";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::SingularGram: return "SINGULAR_GRAM";
        case ErrorCode::SingularMatrix: return "SINGULAR_MATRIX";
        case ErrorCode::EmptyPost: return "EMPTY_POST";
        case ErrorCode::BadProb: return "BAD_PROB";
        case ErrorCode::BadConfig: return "BAD_CONFIG";
        case ErrorCode::StudyFailed: return "STUDY_FAILED";
        case ErrorCode::IoNotFound: return "IO_NOT_FOUND";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::BadLevel: return "BAD_LEVEL";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    }
    return "UNKNOWN";
}

}  // namespace synthctl

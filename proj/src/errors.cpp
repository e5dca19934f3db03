#include "occgrasp/errors.hpp"

namespace occgrasp {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyCloud: return "EmptyCloud";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::BadEnsembleSize: return "BadEnsembleSize";
        case ErrorCode::EmptyShape: return "EmptyShape";
        case ErrorCode::MissingNormals: return "MissingNormals";
        case ErrorCode::NoContact: return "NoContact";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace occgrasp

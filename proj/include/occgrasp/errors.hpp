#pragma once

#include <stdexcept>
#include <string>

namespace occgrasp {

enum class ErrorCode {
    EmptyCloud,
    TooFewPoints,
    UnsupportedFormat,
    ParseError,
    IoError,
    BadEnsembleSize,
    EmptyShape,
    MissingNormals,
    NoContact,
    ConfigError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI (and callers that turn errors into abstentions) can dispatch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// ConfigError is the only code the CLI maps to exit status 2.
inline bool is_config_error(const Error& e) noexcept {
    return e.code() == ErrorCode::ConfigError;
}

}  // namespace occgrasp

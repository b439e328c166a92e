#pragma once

#include <stdexcept>
#include <string>

namespace ecgnet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Signal payload shorter or longer than the header declares.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// A value violates a documented invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Signal shorter than an operation's minimum duration.
class SignalTooShortError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Unknown or inconsistent configuration (wavelet name, SE reduction, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor or vector dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Resampling between rates that are not an integer multiple.
class UnsupportedRatioError : public Error {
public:
    using Error::Error;
};

/// Non-finite value during training.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace ecgnet

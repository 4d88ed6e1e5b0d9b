#pragma once

#include <stdexcept>
#include <string>

namespace gfs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or file schema.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. Carries the 1-based line number of the offending row.
class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Training produced a non-finite value.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace gfs

#pragma once

#include <stdexcept>
#include <string>

namespace lfss {

/// Base of every exception thrown by the library. `exit_code()` is what the
/// CLI returns when the exception escapes a subcommand.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
};

/// Bad user input, such as a malformed config or data that breaks an invariant.
class ValidationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IndexError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A pipeline stage was run before the stage that produces its inputs.
class OrderingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Degenerate linear algebra (singular innovation covariance, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Transaction costs consumed the whole gross return: ln argument <= 0.
class BankruptcyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lfss

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lrksc {

/// Bad arguments to a library call (shape, range, or precondition).
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Input data carries a non-finite entry.
struct InvalidData : std::invalid_argument {
    InvalidData(const std::string& what, std::ptrdiff_t column)
        : std::invalid_argument(what), column(column) {}
    std::ptrdiff_t column;
};

/// A matrix expected to be positive semi-definite has an eigenvalue
/// below the allowed round-off floor.
struct NotPsdError : std::runtime_error {
    NotPsdError(const std::string& what, double eigenvalue)
        : std::runtime_error(what), eigenvalue(eigenvalue) {}
    double eigenvalue;
};

/// Factorization or solve failed.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Text input could not be parsed. `line` is 1-based.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what), line(line) {}
    std::size_t line;
};

} // namespace lrksc

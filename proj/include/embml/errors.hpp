/**
 * @file errors.hpp
 * @brief Exception types raised by the embml library.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace embml {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky failed: the matrix is not (numerically) positive-definite.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Secondary data count K is below the dimension N.
class InsufficientSecondaryData : public Error {
public:
    using Error::Error;
};

/// Orthogonal mismatch direction could not be built.
class DegenerateDirection : public Error {
public:
    using Error::Error;
};

/// Fewer trials than 100/Pfa were supplied to a calibration.
class InsufficientTrials : public Error {
public:
    using Error::Error;
};

/// Data cube too small for the requested window geometry.
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Malformed configuration text. Carries the 1-based line (0 if unknown) and field.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::string field = {})
        : Error(what), line_(line), field_(std::move(field)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed binary or CSV data cube, or CSV curve file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace embml

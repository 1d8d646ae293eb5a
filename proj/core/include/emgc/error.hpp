#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emgc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-domain numeric argument.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operands whose lengths or grid shapes disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

/// Bad magic, unsupported version or malformed header.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Truncated, oversized or empty stream.
class LengthError : public Error {
public:
    using Error::Error;
};

/// Payload values violating an invariant. Carries the offending element index.
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t index)
        : Error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// A window or pixel with no nonzero sample.
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace emgc

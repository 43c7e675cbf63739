#pragma once

#include <stdexcept>
#include <string>

namespace neutsflow {

// Error categories map one-to-one onto CLI exit codes (see cli/app.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments, shapes or configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Unreadable, malformed or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// NaN, divergence or any other numerical breakdown.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace neutsflow

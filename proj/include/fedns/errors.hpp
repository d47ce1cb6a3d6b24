#pragma once

#include <stdexcept>
#include <string>

namespace fedns {

// Base class for all library failures.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Unreadable or malformed input data (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

// Numerical failure: failed factorization, non-finite values, dead line search
// (CLI exit code 4).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace fedns

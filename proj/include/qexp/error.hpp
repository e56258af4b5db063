#pragma once

#include <stdexcept>
#include <string>

namespace qexp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct BuildError : Error {
    using Error::Error;
};

// Index file failures. Each failure mode gets its own type so callers can
// tell a foreign file from a stale or damaged one.
struct IndexFormatError : Error {
    using Error::Error;
};
struct IndexVersionError : Error {
    using Error::Error;
};
struct IndexChecksumError : Error {
    using Error::Error;
};
struct IndexTruncatedError : Error {
    using Error::Error;
};

struct EvalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace qexp

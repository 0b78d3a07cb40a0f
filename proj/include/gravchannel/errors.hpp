#pragma once

#include <stdexcept>
#include <string>

namespace gravchannel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter set or argument violates its documented invariants.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised when a steady state or asymptote is requested for dynamics that never relax.
class NotDissipative : public Error {
public:
    using Error::Error;
};

/// Integration or truncation failure (step-size underflow, leakage, lost positivity, ...).
class NumericalFailure : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail
}  // namespace gravchannel

#pragma once

#include <stdexcept>
#include <string>

namespace mswave {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument outside its admissible range (e.g. theta < 1).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A point or time outside the domain an operation is defined on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input data that violates a structural requirement (parity, grid match, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A solver configuration that cannot be run (CFL violation, bad grid).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

} // namespace mswave

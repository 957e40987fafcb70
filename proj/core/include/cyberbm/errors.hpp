#pragma once

#include <stdexcept>
#include <string>

namespace cyberbm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A root bracket could not be established.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

/// Discretized probabilities failed the post-FFT sanity checks.
class NumericalInstability : public Error {
public:
    using Error::Error;
};

/// A claim was requested in a year without active coverage.
class AdmissibilityViolation : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete configuration. The message names the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cyberbm

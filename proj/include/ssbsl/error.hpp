#pragma once

#include <stdexcept>
#include <string>

namespace ssbsl {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector length, class index or matrix shape disagrees with the model.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A posterior update or covariance estimate lost positive definiteness.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Hyperparameters violate their invariants (beta <= 0, nu <= D-1, ...).
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// Fully supervised learning was asked to run on an unlabeled trial.
class MissingLabelError : public Error {
public:
    using Error::Error;
};

/// Bad user configuration: out-of-range parameters, malformed files.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ssbsl

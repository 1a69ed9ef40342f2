#pragma once

#include <stdexcept>
#include <string>

namespace cvbias {

/// Invalid configuration or parameters supplied by the caller.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A DGP whose conditional-mean recursion is not stationary.
class StationarityError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Sample too short for the requested lags or model.
class SizeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Failures that originate in the numerics rather than the inputs.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gram matrix singular or too ill-conditioned to invert.
class SingularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An observation whose leverage is (numerically) one.
class LeverageError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An algebraic identity that must hold exactly was violated.
class IdentityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Too many Monte Carlo replications failed for a cell to be trusted.
class ReliabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cvbias

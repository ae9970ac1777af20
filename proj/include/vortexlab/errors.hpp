#pragma once

#include <stdexcept>
#include <string>

namespace vlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration, grid or parameter set (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failure of the numerics (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

class StencilTooWide : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DensityFloorViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class LinearSolveDiverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PoissonSolveDiverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonPositiveSamples : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Numerical failure inside a run; the last good state was checkpointed.
class RunAborted : public NumericalError {
public:
    RunAborted(const std::string& what, std::string checkpoint)
        : NumericalError(what), checkpoint_(std::move(checkpoint))
    {
    }
    const std::string& checkpoint() const { return checkpoint_; }

private:
    std::string checkpoint_;
};

} // namespace vlab

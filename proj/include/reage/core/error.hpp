#pragma once

#include <stdexcept>
#include <string>

namespace reage {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violated a domain invariant (age out of range, bad dimensions, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Reading or writing artifacts on disk failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// A dataset manifest failed validation.
class ManifestError : public Error {
public:
    using Error::Error;
};

/// A metric could not be computed (degenerate input, all pairs skipped, ...).
class MetricError : public Error {
public:
    using Error::Error;
};

/// A pluggable backend (renderer, interpolator, estimator) reported failure.
class BackendError : public Error {
public:
    using Error::Error;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
public:
    using Error::Error;
};

} // namespace reage

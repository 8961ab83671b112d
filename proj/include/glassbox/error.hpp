#pragma once

#include <stdexcept>
#include <string>

namespace glassbox {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (bad backend name, out-of-range hyperparameter).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable or inconsistent data (missing target, schema mismatch, empty dataset).
class DataError : public Error {
public:
    using Error::Error;
};

/// A fit that could not produce a usable model (singular system, divergence).
class FitError : public Error {
public:
    using Error::Error;
};

}  // namespace glassbox

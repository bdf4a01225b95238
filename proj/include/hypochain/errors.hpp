#pragma once

#include <stdexcept>
#include <string>

namespace hypochain {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Structural problems with a model definition (dimension mismatch, degenerate H1, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or other numerical failures; carries where it happened.
class NumericError : public Error {
public:
    NumericError(const std::string& what, int coordinate = -1, double time = -1.0)
        : Error(what), coordinate(coordinate), time(time) {}
    int coordinate;  // offending coordinate (0-based), -1 if not applicable
    double time;     // time of blow-up, -1 if not applicable
};

/// Configuration/schema problems; carries the path to the offending field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string path = {})
        : Error(path.empty() ? what : path + ": " + what), field_path(std::move(path)) {}
    std::string field_path;
};

/// Too few samples / all-zero tail counts and similar.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

}  // namespace hypochain

#pragma once

#include <stdexcept>
#include <string>

namespace splinedyn {

/// Invalid configuration or arguments supplied by the caller.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File or format problem while reading or writing data.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: singular system, out-of-domain evaluation, unstable step.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace splinedyn

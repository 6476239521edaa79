#pragma once

#include <stdexcept>
#include <string>

namespace compo {

/// Raised on malformed configuration or invalid arguments to an operation.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Raised when a numerical procedure cannot proceed (divergence, singular
/// system, non-finite values, resource caps).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace compo

#pragma once

#include <stdexcept>
#include <string>

namespace csf {

// Error taxonomy maps onto CLI exit codes: config -> 2, data -> 3, numeric -> 4.
// Shape errors are programming/configuration mistakes and map to config.

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LengthError : DataError {
    explicit LengthError(const std::string& msg) : DataError(msg) {}
};

struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace csf

#pragma once

#include <stdexcept>
#include <string>

namespace dkae {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimensionality mismatch between operands.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// An argument value outside its documented range (m out of range, sigma <= 0, ...).
struct ParameterError : Error {
    explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// Numeric failure at runtime: non-SPD matrix, asymmetric input, degenerate
// codes, invalid kernel. These abort the surrounding computation loudly.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed input file; message carries the byte offset or line number.
struct ParseError : IoError {
    explicit ParseError(const std::string& msg) : IoError(msg) {}
};

// Invalid experiment configuration; message names the offending field.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace dkae

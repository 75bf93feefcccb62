#pragma once

#include <stdexcept>
#include <string>

namespace qem {

// Error taxonomy maps onto the CLI exit codes: config problems exit 2,
// data/parse problems exit 3, numeric failures (NaN/Inf, divergence) exit 4.
// Argument-contract violations inside the library throw std::invalid_argument.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " at line " + std::to_string(line) +
                           ", column " + std::to_string(col)),
        line(line), col(col) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg), line(0), col(0) {}
  int line, col;
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qem

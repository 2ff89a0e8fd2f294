#pragma once

#include <stdexcept>
#include <string>

namespace epifield {

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class NotFoundError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class InvalidInput : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Bad command-line flags or configuration values.
class ConfigError : public InvalidInput {
  using InvalidInput::InvalidInput;
};

/// Factorization failures, non-convergence and other numerical breakdowns.
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace epifield

#pragma once

#include <stdexcept>
#include <string>

namespace lcr {

// Shape disagreement between kernel operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke a documented precondition (non-scalar loss, key mismatch, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownChargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lcr

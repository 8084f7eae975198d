// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cropdrqn {

/// Invalid configuration, dimension mismatch, or architecture mismatch.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation called in the wrong lifecycle state (step after terminal, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")"
                                : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a physical invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& what,
                  std::size_t line = 0)
      : std::runtime_error("invalid " + field + ": " + what +
                           (line ? " (line " + std::to_string(line) + ")" : "")),
        field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during training (NaN loss and similar).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cropdrqn

#pragma once

#include <stdexcept>
#include <string>

namespace enclosure {

// Exit-code families used by the CLI: 1 config, 2 numerical, 3 validation.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A scenario invariant does not hold. `invariant` names it.
class InvariantError : public ConfigError {
 public:
  InvariantError(std::string invariant, const std::string& detail)
      : ConfigError(invariant + ": " + detail), invariant_(std::move(invariant)) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A self-check (residual, identity, bound) failed.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace enclosure

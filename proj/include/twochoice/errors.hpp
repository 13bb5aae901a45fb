#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twochoice {

/// Invalid parameters supplied when building a system, policy, game or experiment.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation that violates its precondition (unknown label, rank out of
/// range, capacity exceeded, ...).
class OperationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A property that must hold by construction did not. Always a bug.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised by run() when an operation of a script fails; carries the position.
class ScriptError : public OperationError {
 public:
  ScriptError(std::size_t position, const std::string& what)
      : OperationError("op " + std::to_string(position) + ": " + what), position_(position) {}

  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ConfigError(message);
}

inline void ensure(bool condition, const std::string& message) {
  if (!condition) throw InvariantViolation(message);
}

}  // namespace twochoice

#pragma once

#include <stdexcept>
#include <string>

namespace dwnet {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value violates an operation's precondition (empty input, bad sigma, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Object used out of order, e.g. backward without a matching forward.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed file contents. The message carries the byte offset where known.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NetworkSpec or run configuration failed validation. `field()` names the
/// offending entry.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Training diverged (non-finite loss).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dwnet

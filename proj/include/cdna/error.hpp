#pragma once

#include <stdexcept>
#include <string>

namespace cdna {

/// Invalid generator or sweep configuration. The message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-range persisted data.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field_path, const std::string& what)
      : std::runtime_error(field_path + ": " + what), field_path_(std::move(field_path)) {}

  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An exhaustive search refused to run because the instance exceeds its bound.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant was broken (e.g. quota overcommitted).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cdna

#pragma once

#include <stdexcept>
#include <string>

namespace nli {

// Shapes of two operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dataset could not be read or contained invalid records.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered during optimisation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint file is truncated or corrupt. `section()` names the part that failed.
class IntegrityError : public std::runtime_error {
 public:
  IntegrityError(std::string section, const std::string& what)
      : std::runtime_error("checkpoint integrity error in section " + section + ": " + what),
        section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nli

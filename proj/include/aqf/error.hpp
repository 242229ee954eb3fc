#pragma once

#include <stdexcept>
#include <string>

namespace aqf {

// Invalid physical or numerical parameters (out of range, incompatible combos).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operands built over different bases, mismatched shapes.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A problem would exceed a hard size guard (dense oracle, basis size).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical integration failed (norm underflow, blow-up, invariant drift).
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Configuration file problems; key() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace aqf

#pragma once

#include <stdexcept>
#include <string>

namespace edgesim {

/// Raised when an argument falls outside the domain an operation is defined on
/// (out-of-range frequency, negative bandwidth, mismatched shapes).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised for malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace edgesim

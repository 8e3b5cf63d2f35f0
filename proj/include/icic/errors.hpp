#pragma once

#include <stdexcept>
#include <string>

namespace icic {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when an iterative or adaptive routine exhausts its budget before
/// meeting its tolerance.
class NonConvergenceError : public std::runtime_error {
public:
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed experiment configurations or inconsistent scenarios.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace icic

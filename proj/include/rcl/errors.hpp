#pragma once

#include <stdexcept>
#include <string>

namespace rcl {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Request exceeds a supported size (order limit, quadrature size, memory).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Non-finite coefficients, singular systems, failed residual contracts.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mesh cannot represent the requested geometry.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid run configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rcl

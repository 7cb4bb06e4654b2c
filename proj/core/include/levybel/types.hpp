#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace levybel {

// Largest supported state dimension. Matrices are stack allocated up to this
// size, so per-path simulation never touches the heap for linear algebra.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// =============================================================================
// Error hierarchy
// =============================================================================

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a density or field function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Measure cannot be used for the requested operation (no sampler, asymmetric
// without a compensator drift, ...).
class UnsupportedMeasureError : public Error {
 public:
  using Error::Error;
};

// Adaptive quadrature or ODE step control could not meet its tolerance.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

// Overflow or NaN in a simulated state.
class NonFiniteStateError : public Error {
 public:
  using Error::Error;
};

// Bad configuration (schema, ranges, cross-module consistency).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace levybel

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bsts {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Every sampler takes its random source explicitly; there is no global engine.
using Rng = std::mt19937_64;

// Bad shapes or out-of-domain sizes handed to an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed configuration, calendar or simulation spec.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV contents, transforms).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sampler produced or met a non-finite / non-positive-definite quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, Index pivot)
      : NumericalError(what), pivot_(pivot) {}

  // Index of the failing diagonal entry, or -1 when the backend does not say.
  Index pivot() const { return pivot_; }

 private:
  Index pivot_;
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bsts

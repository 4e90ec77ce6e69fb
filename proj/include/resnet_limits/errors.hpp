#pragma once

#include <stdexcept>
#include <string>

namespace resnet_limits {

// Bad hyperparameters, malformed inputs, or flag combinations that are
// rejected before any numerical work starts.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A simulation or numerical routine could not produce a finite result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An intermediate norm underflowed (or hit zero) in a simulator.
class DegenerateNormError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A pre-activation fed to a ReLU was exactly zero, so the network is not
// differentiable at the requested input.
class ZeroPreactivationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A density grid does not carry enough of the probability mass.
class GridTooNarrowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace resnet_limits

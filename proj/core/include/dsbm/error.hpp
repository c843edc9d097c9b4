#pragma once

#include <stdexcept>
#include <string>

namespace dsbm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The kernel moment system has no unique solution (window too small for the order).
class SingularMomentSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A constant overflowed the double range (e.g. exp(3 W_max)).
class ConstantOverflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Invalid inputs and configuration. The CLI maps these to exit code 2.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidInitial : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class OutOfRange : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class WindowTooLarge : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class LabelOutOfRange : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyCommunity : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// File-system and format failures. The CLI maps these to exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dsbm

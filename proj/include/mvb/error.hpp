#pragma once

#include <stdexcept>
#include <string>

namespace mvb {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file, config, or CLI argument. CLI exit code 2.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition or invariant was violated. CLI exit code 3.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// Point does not project: camera-frame depth is not strictly positive.
class NonPositiveDepth : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// Observations do not determine a 3D point (zero baseline, parallel rays).
class DegenerateGeometry : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// Wrist and elbow coincide; the forearm direction is undefined.
class DegenerateArm : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// A metric was requested over an empty set of examples.
class EmptyTestSet : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

}  // namespace mvb

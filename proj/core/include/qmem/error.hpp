#pragma once

#include <stdexcept>
#include <string>

namespace qmem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad state, bad window, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A MemoryConfig (or other configuration document) failed validation.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Data is well-formed but physically meaningless for the estimator.
class InvalidData : public Error {
public:
  using Error::Error;
};

/// Fit could not produce a usable estimate (degenerate design, divergence).
class FitError : public Error {
public:
  using Error::Error;
};

/// Design matrix of a linear fit is rank deficient.
class IllConditionedFit : public FitError {
public:
  using FitError::FitError;
};

/// Point set does not determine a rotation (collinear inputs).
class DegenerateGeometry : public FitError {
public:
  using FitError::FitError;
};

/// Quantity is mathematically undefined for the given inputs
/// (fidelity with no detections, SBR with zero background).
class UndefinedQuantity : public Error {
public:
  using Error::Error;
};

/// File or stream could not be read/written or does not match its schema.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace qmem

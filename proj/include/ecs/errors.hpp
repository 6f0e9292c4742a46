#pragma once

#include <stdexcept>
#include <string>

namespace ecs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A q-series or lattice sum hit `max_terms` before its tail bound was met.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested within `delta_sing` of a pole (or a pair closer
/// than the configuration's minimum separation).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (annulus bounds, ordering
/// of a configuration, q = 0 where a beta derivative is needed, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Parameter constraint violated (e.g. lambda != Ntilde/N for the
/// exact-eigenfunction cases, zero mass, zero coupling).
class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// Coefficient extraction failed its self-convergence check or the
/// extracted coefficient vanishes at the requested configuration.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecs

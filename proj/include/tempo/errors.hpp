#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tempo {

// Root of the library's exception hierarchy.  Everything thrown by tempo on
// bad input or a failed contract derives from this, so callers can catch one
// type at an API boundary and turn it into an error report.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// State lies outside the declared phase-space domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration: bad tolerances, empty grids, negative radii, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched vector/matrix dimensions between objects that must agree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Two objects built over different underlying spaces were combined.
class BaseMismatch : public Error {
 public:
  using Error::Error;
};

// A real-valued operation was applied to a complex object or vice versa.
class KindMismatch : public Error {
 public:
  using Error::Error;
};

// No section crossing was found within the allotted horizon.
class NoCrossing : public Error {
 public:
  using Error::Error;
};

// A crossing exists but the flow is tangent to the section there, so the
// crossing time is not an isolated simple root.
class TangentialCrossing : public Error {
 public:
  using Error::Error;
};

// The vector field vanishes at the requested base point.
class StationaryPoint : public Error {
 public:
  using Error::Error;
};

// A constructed object failed its own Monte Carlo validation.
class ValidationFailed : public Error {
 public:
  using Error::Error;
};

// Query point lies outside the validated neighbourhood of a local clock.
class OutsideBall : public Error {
 public:
  using Error::Error;
};

// A certificate was requested before its precondition check passed.
class PreconditionUnverified : public Error {
 public:
  using Error::Error;
};

// Text parse failure; carries the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace tempo

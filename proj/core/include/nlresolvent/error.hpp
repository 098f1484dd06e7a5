#pragma once

#include <stdexcept>
#include <string>

namespace nlresolvent {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter outside the documented domain (p <= 0, density outside (0,1], ...).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Malformed or structurally invalid graph input.
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Materialization would exceed the configured vertex cap.
class CapError : public Error {
 public:
  CapError(const std::string& what, std::size_t cap) : Error(what), cap_(cap) {}
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

/// Consecutive path vertices are not adjacent.
class InvalidPath : public Error {
 public:
  using Error::Error;
};

/// Signals a broken internal invariant (e.g. a scalar root that cannot be
/// bracketed although monotonicity guarantees it). Seeing one is a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlresolvent

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "nlresolvent/error.hpp"

namespace nlresolvent {

/// Open interval (lo, hi) = ran phi.
struct Range {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double s) const { return s > lo && s < hi; }
  bool bounded_above() const { return hi < std::numeric_limits<double>::infinity(); }
};

/// Raised when phi^{-1} is evaluated outside ran phi, i.e. when L g(x) leaves
/// the range of the nonlinearity.
class RangeError : public Error {
 public:
  RangeError(double value, Range range);
  double value() const noexcept { return value_; }
  Range range() const noexcept { return range_; }

 private:
  double value_;
  Range range_;
};

/// Tolerances for numeric inversion of phi.
struct InversionTolerance {
  double atol = 1e-12;
  double rtol = 1e-10;
};

/// A strictly increasing continuous phi with phi(0) = 0, together with its
/// inverse on ran phi and the antiderivative Phi of 2 phi. Pieces without a
/// closed form fall back to bisection/Newton (inverse) and adaptive Simpson
/// quadrature (Phi).
class Nonlinearity {
 public:
  using Fn = std::function<double(double)>;

  struct Parts {
    std::string name;
    Fn phi;
    Range range;
    Fn derivative;    // optional
    Fn inverse;       // optional, closed form on range
    Fn antiderivative;  // optional, closed form of Phi
  };

  explicit Nonlinearity(Parts parts);

  static Nonlinearity identity();
  /// sign(t) |t|^p; throws InvalidParameter for p <= 0.
  static Nonlinearity odd_power(double p);
  /// sign(t) log(1 + |t|).
  static Nonlinearity odd_log();
  /// arctan, range (-pi/2, pi/2).
  static Nonlinearity bounded_atan();
  /// c * base for c > 0. Keeps closed forms of the base where they exist.
  static Nonlinearity scaled(const Nonlinearity& base, double c);
  /// Parses the CLI spelling: identity | power:p | log | atan.
  static Nonlinearity parse(const std::string& spec);

  const std::string& name() const { return parts_.name; }
  const Range& range() const { return parts_.range; }
  bool has_derivative() const { return static_cast<bool>(parts_.derivative); }
  bool has_closed_inverse() const { return static_cast<bool>(parts_.inverse); }
  bool has_closed_antiderivative() const {
    return static_cast<bool>(parts_.antiderivative);
  }

  double phi(double t) const { return parts_.phi(t); }
  /// phi'(t); only meaningful when has_derivative(). May be +inf.
  double derivative(double t) const { return parts_.derivative(t); }
  /// Closed form when available, otherwise phi_inv_numeric. Throws RangeError.
  double phi_inv(double s) const;
  double phi_inv_numeric(double s, InversionTolerance tol = {}) const;
  /// Closed form when available, otherwise Phi_numeric.
  double Phi(double s) const;
  double Phi_numeric(double s, double rtol = 1e-10) const;

 private:
  Parts parts_;
};

}  // namespace nlresolvent

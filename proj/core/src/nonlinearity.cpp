#include "nlresolvent/nonlinearity.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace nlresolvent {

namespace {

std::string describe(Range r) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << r.lo << ", " << r.hi << ')';
  return os.str();
}

double sign(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

// Adaptive Simpson on [a, b] with the classic Richardson correction.
double simpson_step(const std::function<double(double)>& f, double a, double b,
                    double fa, double fm, double fb, double whole, double eps,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace

RangeError::RangeError(double value, Range range)
    : Error([&] {
        std::ostringstream os;
        os.precision(17);
        os << "value " << value << " is outside ran phi = " << describe(range);
        return os.str();
      }()),
      value_(value),
      range_(range) {}

Nonlinearity::Nonlinearity(Parts parts) : parts_(std::move(parts)) {
  if (!parts_.phi) {
    throw InvalidParameter("nonlinearity '" + parts_.name + "' has no phi");
  }
  if (!(parts_.range.lo < 0.0 && parts_.range.hi > 0.0)) {
    throw InvalidParameter("range of nonlinearity '" + parts_.name +
                           "' must contain 0 in its interior");
  }
}

Nonlinearity Nonlinearity::identity() {
  return Nonlinearity(Parts{
      .name = "identity",
      .phi = [](double t) { return t; },
      .range = {},
      .derivative = [](double) { return 1.0; },
      .inverse = [](double s) { return s; },
      .antiderivative = [](double s) { return s * s; },
  });
}

Nonlinearity Nonlinearity::odd_power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw InvalidParameter("odd_power exponent must be positive and finite");
  }
  std::ostringstream name;
  name << "power:" << p;
  return Nonlinearity(Parts{
      .name = name.str(),
      .phi = [p](double t) { return sign(t) * std::pow(std::abs(t), p); },
      .range = {},
      .derivative =
          [p](double t) {
            if (t == 0.0) {
              if (p < 1.0) return std::numeric_limits<double>::infinity();
              return p == 1.0 ? 1.0 : 0.0;
            }
            return p * std::pow(std::abs(t), p - 1.0);
          },
      .inverse = [p](double s) { return sign(s) * std::pow(std::abs(s), 1.0 / p); },
      .antiderivative =
          [p](double s) { return 2.0 * std::pow(std::abs(s), p + 1.0) / (p + 1.0); },
  });
}

Nonlinearity Nonlinearity::odd_log() {
  return Nonlinearity(Parts{
      .name = "log",
      .phi = [](double t) { return sign(t) * std::log1p(std::abs(t)); },
      .range = {},
      .derivative = [](double t) { return 1.0 / (1.0 + std::abs(t)); },
      .inverse = [](double s) { return sign(s) * std::expm1(std::abs(s)); },
      .antiderivative =
          [](double s) {
            const double a = std::abs(s);
            return 2.0 * ((1.0 + a) * std::log1p(a) - a);
          },
  });
}

Nonlinearity Nonlinearity::bounded_atan() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  return Nonlinearity(Parts{
      .name = "atan",
      .phi = [](double t) { return std::atan(t); },
      .range = {-half_pi, half_pi},
      .derivative = [](double t) { return 1.0 / (1.0 + t * t); },
      .inverse = [](double s) { return std::tan(s); },
      .antiderivative =
          [](double s) { return 2.0 * s * std::atan(s) - std::log1p(s * s); },
  });
}

Nonlinearity Nonlinearity::scaled(const Nonlinearity& base, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InvalidParameter("nonlinearity scale must be positive and finite");
  }
  std::ostringstream name;
  name << c << '*' << base.name();
  Parts parts;
  parts.name = name.str();
  parts.phi = [base, c](double t) { return c * base.phi(t); };
  parts.range = Range{c * base.range().lo, c * base.range().hi};
  if (base.has_derivative()) {
    parts.derivative = [base, c](double t) { return c * base.derivative(t); };
  }
  if (base.has_closed_inverse()) {
    parts.inverse = [base, c](double s) { return base.phi_inv(s / c); };
  }
  if (base.has_closed_antiderivative()) {
    parts.antiderivative = [base, c](double s) { return c * base.Phi(s); };
  }
  return Nonlinearity(std::move(parts));
}

Nonlinearity Nonlinearity::parse(const std::string& spec) {
  if (spec == "identity" || spec == "id") return identity();
  if (spec == "log" || spec == "odd_log") return odd_log();
  if (spec == "atan" || spec == "bounded_atan") return bounded_atan();
  for (const std::string prefix : {"power:", "odd_power:"}) {
    if (spec.rfind(prefix, 0) == 0) {
      const std::string arg = spec.substr(prefix.size());
      std::size_t used = 0;
      double p = 0.0;
      try {
        p = std::stod(arg, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != arg.size()) {
        throw InvalidParameter("bad exponent in nonlinearity '" + spec + "'");
      }
      return odd_power(p);
    }
  }
  throw InvalidParameter("unknown nonlinearity '" + spec +
                         "' (expected identity | power:p | log | atan)");
}

double Nonlinearity::phi_inv(double s) const {
  if (!parts_.range.contains(s)) {
    throw RangeError(s, parts_.range);
  }
  if (parts_.inverse) return parts_.inverse(s);
  return phi_inv_numeric(s);
}

double Nonlinearity::phi_inv_numeric(double s, InversionTolerance tol) const {
  if (!parts_.range.contains(s)) {
    throw RangeError(s, parts_.range);
  }
  if (s == 0.0) return 0.0;
  const double target_tol = tol.atol + tol.rtol * std::abs(s);

  // Grow [-1, 1] geometrically until it brackets the preimage.
  double lo = -1.0;
  double hi = 1.0;
  for (int i = 0; i < 2100 && phi(hi) < s; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 2100 && phi(lo) > s; ++i) {
    hi = lo;
    lo *= 2.0;
  }
  if (!(phi(lo) <= s && phi(hi) >= s)) {
    throw InternalError("could not bracket phi^{-1}(" + std::to_string(s) +
                        ") for '" + parts_.name + "'");
  }

  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double r = phi(t) - s;
    if (std::abs(r) <= target_tol) return t;
    if (r < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = 0.5 * (lo + hi);
    if (parts_.derivative) {
      const double d = parts_.derivative(t);
      if (std::isfinite(d) && d > 0.0) {
        const double newton = t - r / d;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (next == t || hi - lo <= std::numeric_limits<double>::epsilon() * std::abs(t)) {
      return next;
    }
    t = next;
  }
  return t;
}

double Nonlinearity::Phi(double s) const {
  if (parts_.antiderivative) return parts_.antiderivative(s);
  return Phi_numeric(s);
}

double Nonlinearity::Phi_numeric(double s, double rtol) const {
  if (s == 0.0) return 0.0;
  const auto integrand = [this](double t) { return 2.0 * phi(t); };
  const double a = 0.0;
  const double b = s;
  const double fa = integrand(a);
  const double fb = integrand(b);
  const double fm = integrand(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double eps = rtol * std::max(std::abs(whole), std::numeric_limits<double>::min());
  const double value = simpson_step(integrand, a, b, fa, fm, fb, whole, eps, 60);
  return std::max(value, 0.0);
}

}  // namespace nlresolvent

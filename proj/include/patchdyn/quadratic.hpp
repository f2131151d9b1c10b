#pragma once

#include <cmath>

namespace patchdyn {

struct QuadraticRoots {
  int count = 0;       ///< number of real roots (0, 1 or 2)
  double lo = NAN;     ///< smaller root
  double hi = NAN;     ///< larger root
};

/// Real roots of a x^2 + b x + c with a != 0, without cancellation: the
/// larger-magnitude root comes from the quadratic formula, the other from
/// the product of roots c/a. Negative discriminants within `disc_floor`
/// are treated as a double root.
inline QuadraticRoots solve_quadratic(double a, double b, double c, double disc_floor = 0.0) {
  QuadraticRoots r;
  double disc = b * b - 4 * a * c;
  if (disc < 0) {
    if (-disc > disc_floor) return r;
    disc = 0;
  }
  if (disc == 0) {
    r.count = 1;
    r.lo = r.hi = -b / (2 * a);
    return r;
  }
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double x1 = q / a;
  double x2 = q != 0 ? c / q : -b / a - x1;
  if (x1 > x2) std::swap(x1, x2);
  r.count = 2;
  r.lo = x1;
  r.hi = x2;
  return r;
}

}  // namespace patchdyn

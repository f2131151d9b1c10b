#pragma once

#include <cmath>

#include "patchdyn/model.hpp"

namespace patchdyn {

struct NewtonResult {
  State x;
  double residual;
  int iterations;
  bool converged;
};

/// Plain 2-D Newton iteration on f(x) = 0 with an analytic Jacobian.
template <class F, class J>
NewtonResult newton2(F&& f, J&& jac, State x, double tol = 1e-15, int max_iter = 60) {
  auto norm = [](State r) { return std::hypot(r.u, r.v); };
  State r = f(x);
  int it = 0;
  for (; it < max_iter && norm(r) > tol; ++it) {
    const Matrix2 j = jac(x);
    const double det = j.det();
    if (det == 0 || !std::isfinite(det)) break;
    const double du = (j.j22 * r.u - j.j12 * r.v) / det;
    const double dv = (-j.j21 * r.u + j.j11 * r.v) / det;
    const State next{x.u - du, x.v - dv};
    const State rn = f(next);
    if (!(norm(rn) < norm(r)) && std::hypot(du, dv) <= 1e-15 * (1 + norm(x))) break;
    x = next;
    r = rn;
  }
  const double res = norm(r);
  return {x, res, it, std::isfinite(res) && res <= std::max(tol, 1e-13)};
}

/// Bisection on a bracket with f(lo) and f(hi) of opposite sign.
template <class F>
double bisect(F&& f, double lo, double hi, int max_iter = 200) {
  double flo = f(lo);
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace patchdyn

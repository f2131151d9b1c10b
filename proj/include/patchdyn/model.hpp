#pragma once

// Two-patch population model with an Allee effect in patch 1.
//
// Nonlinear (density-dependent) dispersal:
//   u' = u (u/(m+u) - e - h u) + delta u (v - u)
//   v' = s v (1 - v)           + delta v (u - v)
// Linear dispersal:
//   u' = u (u/(m+u) - e - h u) + delta (v - u)
//   v' = s v (1 - v)           + delta (u - v)

#include <cmath>
#include <sstream>
#include <string>

#include "patchdyn/errors.hpp"

namespace patchdyn {

/// Dimensional parameters. All rates are per unit time, densities in
/// arbitrary consistent units.
struct OriginalParams {
  double r;  ///< maximum birth rate
  double A;  ///< Allee strength
  double d;  ///< natural mortality
  double b;  ///< intra-patch competition death rate
  double a;  ///< patch-2 intrinsic growth
  double c;  ///< patch-2 competition rate
  double D;  ///< dispersal coefficient
};

/// Strict mode requires 0 < e < 1 (nonlinear model); relaxed mode only
/// requires e > 0 (linear model, whose reference experiments use e = 2).
enum class Validation { Strict, Relaxed };

/// Nondimensional parameters (m, e, h, delta, s).
struct OdeParams {
  double m;
  double e;
  double h;
  double delta;
  double s;
};

struct State {
  double u;
  double v;

  friend bool operator==(const State&, const State&) = default;
};

struct Matrix2 {
  double j11;
  double j12;
  double j21;
  double j22;

  [[nodiscard]] double trace() const { return j11 + j22; }
  [[nodiscard]] double det() const { return j11 * j22 - j12 * j21; }
};

inline void validate(const OdeParams& p, Validation mode = Validation::Strict) {
  auto fail = [](const char* what, double value) {
    std::ostringstream os;
    os << "invalid parameter: " << what << " (got " << value << ")";
    throw ValidationError(os.str());
  };
  if (!std::isfinite(p.m) || !(p.m > 0)) fail("m > 0", p.m);
  if (!std::isfinite(p.h) || !(p.h > 0)) fail("h > 0", p.h);
  if (!std::isfinite(p.delta) || !(p.delta > 0)) fail("delta > 0", p.delta);
  if (!std::isfinite(p.s) || !(p.s > 0)) fail("s > 0", p.s);
  if (!std::isfinite(p.e) || !(p.e > 0)) fail("e > 0", p.e);
  if (mode == Validation::Strict && !(p.e < 1)) fail("e < 1 (strict mode)", p.e);
}

inline OdeParams make_params(double m, double e, double h, double delta, double s,
                             Validation mode = Validation::Strict) {
  OdeParams p{m, e, h, delta, s};
  validate(p, mode);
  return p;
}

inline OdeParams nondimensionalize(const OriginalParams& q,
                                   Validation mode = Validation::Strict) {
  const double fields[] = {q.r, q.A, q.d, q.b, q.a, q.c, q.D};
  const char* names[] = {"r", "A", "d", "b", "a", "c", "D"};
  for (int i = 0; i < 7; ++i) {
    if (!std::isfinite(fields[i]) || !(fields[i] > 0)) {
      throw DomainError(std::string("original parameter must be positive: ") + names[i]);
    }
  }
  OdeParams p{q.A * q.c / q.a, q.d / q.r, q.a * q.b / (q.c * q.r), q.D * q.a / (q.c * q.r),
              q.a / q.r};
  validate(p, mode);
  return p;
}

/// Maps a state of the dimensional model to nondimensional coordinates.
inline State scale_state(const OriginalParams& q, State x) {
  return {q.c * x.u / q.a, q.c * x.v / q.a};
}

/// Per-capita Allee growth u/(m+u) - e - h u. With m = 0 and u = 0 the
/// saturating term is taken as 0 (the caller multiplies by u anyway).
inline double allee_growth(double m, double e, double h, double u) {
  const double denom = m + u;
  const double sat = denom > 0 ? u / denom : 0.0;
  return sat - e - h * u;
}

inline State rhs_original(const OriginalParams& q, State x) {
  const double u = x.u, v = x.v;
  return {u * (q.r * u / (q.A + u) - q.d - q.b * u) + q.D * u * (v - u),
          v * (q.a - q.c * v) + q.D * v * (u - v)};
}

inline State rhs_nonlinear(const OdeParams& p, State x) {
  const double u = x.u, v = x.v;
  return {u * allee_growth(p.m, p.e, p.h, u) + p.delta * u * (v - u),
          p.s * v * (1 - v) + p.delta * v * (u - v)};
}

inline Matrix2 jacobian_nonlinear(const OdeParams& p, State x) {
  const double u = x.u, v = x.v;
  const double mu = p.m + u;
  return {u * (2 * p.m + u) / (mu * mu) - p.e - 2 * (p.h + p.delta) * u + p.delta * v,
          p.delta * u, p.delta * v, p.s - 2 * (p.s + p.delta) * v + p.delta * u};
}

inline State rhs_linear(const OdeParams& p, State x) {
  const double u = x.u, v = x.v;
  return {u * allee_growth(p.m, p.e, p.h, u) + p.delta * (v - u),
          p.s * v * (1 - v) + p.delta * (u - v)};
}

inline Matrix2 jacobian_linear(const OdeParams& p, State x) {
  const double u = x.u, v = x.v;
  const double mu = p.m + u;
  return {u * (2 * p.m + u) / (mu * mu) - p.e - 2 * p.h * u - p.delta, p.delta, p.delta,
          p.s - 2 * p.s * v - p.delta};
}

/// Second derivatives of the nonlinear right-hand side. Only the nonzero
/// entries are stored: F1_uu, F1_uv, F2_uv, F2_vv (F1_vv = F2_uu = 0).
struct Hessians {
  double f1_uu;
  double f1_uv;
  double f2_uv;
  double f2_vv;
};

inline Hessians hessians_nonlinear(const OdeParams& p, State x) {
  const double mu = p.m + x.u;
  return {2 * p.m * p.m / (mu * mu * mu) - 2 * (p.h + p.delta), p.delta, p.delta,
          -2 * (p.s + p.delta)};
}

/// dF/dm for the nonlinear model.
inline State rhs_nonlinear_dm(const OdeParams& p, State x) {
  const double mu = p.m + x.u;
  return {-x.u * x.u / (mu * mu), 0.0};
}

// Nullcline maps of the linear model: equilibria are the intersections of
// u = H1(v) and v = H2(u), and rhs_linear = (delta [v - H2(u)], delta [u - H1(v)]).

inline double H1(const OdeParams& p, double v) {
  return ((p.delta - p.s) * v + p.s * v * v) / p.delta;
}

inline double H2(const OdeParams& p, double u) {
  return u * (-u / (p.m + u) + p.e + p.delta + p.h * u) / p.delta;
}

inline double H1_prime(const OdeParams& p, double v) {
  return (p.delta - p.s + 2 * p.s * v) / p.delta;
}

inline double H2_prime(const OdeParams& p, double u) {
  const double mu = p.m + u;
  return -(u * (2 * p.m + u) / (mu * mu) - p.e - p.delta - 2 * p.h * u) / p.delta;
}

/// Divergence of (g F1, g F2) for the nonlinear model with g = 1/(u^2 v^2):
///   d(gF1)/du = [e - delta v - u^2/(m+u)^2] / (u^2 v^2)
///   d(gF2)/dv = -(s + delta u) / (u^2 v^2)
inline double dulac_divergence(const OdeParams& p, State x) {
  const double u = x.u, v = x.v;
  if (!(u > 0) || !(v > 0)) {
    throw DomainError("Dulac divergence requires u > 0 and v > 0");
  }
  const double mu = p.m + u;
  const double uv2 = u * u * v * v;
  const double d1 = (p.e - p.delta * v - u * u / (mu * mu)) / uv2;
  const double d2 = -(p.s + p.delta * u) / uv2;
  return d1 + d2;
}

}  // namespace patchdyn

#pragma once

// Closed-form equilibria, thresholds, local classification and regime
// identification for the two-patch models.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "patchdyn/errors.hpp"
#include "patchdyn/linalg.hpp"
#include "patchdyn/model.hpp"
#include "patchdyn/quadratic.hpp"
#include "patchdyn/roots.hpp"

namespace patchdyn {

/// Relative band inside which two thresholds are treated as equal.
inline constexpr double kEqualityRel = 1e-9;

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kEqualityRel * std::max(1.0, std::abs(a));
}

enum class EquilibriumKind {
  Trivial,         // E0 = (0, 0)
  BoundaryV,       // Ev = (0, s/(s+delta))
  BoundaryU1,      // larger root on the u-axis
  BoundaryU2,      // smaller root on the u-axis
  BoundaryU3,      // double root on the u-axis (m = m0)
  Positive1,       // E1
  Positive2,       // E2
  Positive3,       // E3 (m = m*)
  LinearOrigin,    // O, linear model
  LinearPositive,  // positive equilibrium of the linear model
};

enum class Stability {
  StableNode,
  StableFocus,
  Saddle,
  UnstableNode,
  UnstableFocus,
  AttractingSaddleNode,
  RepellingSaddleNode,
  Degenerate,
};

/// Which sector of a saddle-node lies in the right half-plane.
enum class Sector { None, ParabolicRight, HyperbolicRight };

struct StabilityLabel {
  Stability type = Stability::Degenerate;
  Sector sector = Sector::None;

  friend bool operator==(const StabilityLabel&, const StabilityLabel&) = default;
};

struct Equilibrium {
  double u = 0;
  double v = 0;
  EquilibriumKind kind = EquilibriumKind::Trivial;
  StabilityLabel stability;
  Eigenpair eigenvalues{};

  [[nodiscard]] State state() const { return {u, v}; }
};

inline std::string_view to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::Trivial: return "E0";
    case EquilibriumKind::BoundaryV: return "Ev";
    case EquilibriumKind::BoundaryU1: return "U1";
    case EquilibriumKind::BoundaryU2: return "U2";
    case EquilibriumKind::BoundaryU3: return "U3";
    case EquilibriumKind::Positive1: return "E1";
    case EquilibriumKind::Positive2: return "E2";
    case EquilibriumKind::Positive3: return "E3";
    case EquilibriumKind::LinearOrigin: return "O";
    case EquilibriumKind::LinearPositive: return "Ehat";
  }
  return "?";
}

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::StableNode: return "stable-node";
    case Stability::StableFocus: return "stable-focus";
    case Stability::Saddle: return "saddle";
    case Stability::UnstableNode: return "unstable-node";
    case Stability::UnstableFocus: return "unstable-focus";
    case Stability::AttractingSaddleNode: return "attracting-saddle-node";
    case Stability::RepellingSaddleNode: return "repelling-saddle-node";
    case Stability::Degenerate: return "degenerate";
  }
  return "?";
}

inline std::string_view to_string(Sector s) {
  switch (s) {
    case Sector::None: return "none";
    case Sector::ParabolicRight: return "parabolic-right";
    case Sector::HyperbolicRight: return "hyperbolic-right";
  }
  return "?";
}

inline std::string describe(const StabilityLabel& l) {
  std::string out(to_string(l.type));
  if (l.sector != Sector::None) {
    out += "[";
    out += to_string(l.sector);
    out += "]";
  }
  return out;
}

inline bool is_attracting(const StabilityLabel& l) {
  return l.type == Stability::StableNode || l.type == Stability::StableFocus;
}

// ---------------------------------------------------------------------------
// Thresholds

struct DerivedQuantities {
  double B = 0;   ///< s delta / (s + delta)
  double m0 = 0;  ///< boundary fold, (1 - sqrt e)^2 / (h + delta)
  double m1 = 0;  ///< (1 + sqrt e)^2 / (h + delta)
  std::optional<double> mstar;   ///< interior fold, only when e > B
  std::optional<double> m1star;  ///< only when e > B
  // copies needed for the discriminants
  double e = 0;
  double h = 0;
  double delta = 0;

  /// Discriminant of the u-axis quadratic as a function of m.
  [[nodiscard]] double disc1(double m) const {
    const double k = h + delta;
    return k * k * m * m - 2 * (1 + e) * k * m + (1 - e) * (1 - e);
  }
  /// Discriminant of the positive-equilibrium quadratic as a function of m.
  [[nodiscard]] double disc3(double m) const {
    const double k = h + B;
    const double w = e - B;
    return k * k * m * m - 2 * (w + 1) * k * m + (w - 1) * (w - 1);
  }
  /// 1/(h+B): existence limit for E1 in the e = B case.
  [[nodiscard]] double degenerate_limit() const { return 1 / (h + B); }
  [[nodiscard]] bool e_equals_B() const { return nearly_equal(e, B); }
  [[nodiscard]] bool e_below_B() const { return e < B && !e_equals_B(); }
  [[nodiscard]] bool e_above_B() const { return e > B && !e_equals_B(); }
};

inline DerivedQuantities derived_thresholds(const OdeParams& p) {
  DerivedQuantities d;
  d.e = p.e;
  d.h = p.h;
  d.delta = p.delta;
  // harmonic form of s delta/(s + delta)
  d.B = 1 / (1 / p.s + 1 / p.delta);
  const double se = std::sqrt(p.e);
  d.m0 = (1 - se) * (1 - se) / (p.h + p.delta);
  d.m1 = (1 + se) * (1 + se) / (p.h + p.delta);
  if (d.e_above_B()) {
    const double w = std::sqrt(p.e - d.B);
    d.mstar = (1 - w) * (1 - w) / (p.h + d.B);
    d.m1star = (1 + w) * (1 + w) / (p.h + d.B);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Classification

inline StabilityLabel classify_by_eigenvalues(const Eigenpair& ev) {
  if (is_complex_pair(ev)) {
    const double re = ev[0].real();
    if (re < 0) return {Stability::StableFocus};
    if (re > 0) return {Stability::UnstableFocus};
    return {Stability::Degenerate};
  }
  const double a = ev[0].real(), b = ev[1].real();
  if (a < 0 && b < 0) return {Stability::StableNode};
  if (a > 0 && b > 0) return {Stability::UnstableNode};
  if (a < 0 && b > 0) return {Stability::Saddle};
  return {Stability::Degenerate};
}

/// True when the eigenvalue signs agree with a hyperbolic label; labels that
/// describe non-hyperbolic points are not checked.
inline bool eigen_concordant(const StabilityLabel& label, const Eigenpair& ev) {
  const double r0 = ev[0].real(), r1 = ev[1].real();
  switch (label.type) {
    case Stability::Saddle: return !is_complex_pair(ev) && r0 < 0 && r1 > 0;
    case Stability::StableNode:
    case Stability::StableFocus: return r0 < 0 && r1 < 0;
    case Stability::UnstableNode:
    case Stability::UnstableFocus: return r0 > 0 && r1 > 0;
    default: return true;
  }
}

namespace detail {

inline StabilityLabel stable_kind(const Eigenpair& ev) {
  return {is_complex_pair(ev) ? Stability::StableFocus : Stability::StableNode};
}

/// Label from the existence/stability theorems. `checked` is cleared for
/// labels at non-hyperbolic points.
inline StabilityLabel theorem_label(const OdeParams& p, EquilibriumKind kind, const Eigenpair& ev,
                                    bool& checked) {
  checked = true;
  const DerivedQuantities d = derived_thresholds(p);
  switch (kind) {
    case EquilibriumKind::Trivial: return {Stability::Saddle};
    case EquilibriumKind::BoundaryV: {
      if (d.e_equals_B()) {
        checked = false;
        const double mk = p.m * (p.h + d.B);
        if (nearly_equal(mk, 1.0)) return {Stability::StableNode};
        return {Stability::AttractingSaddleNode,
                mk > 1 ? Sector::ParabolicRight : Sector::HyperbolicRight};
      }
      return d.e_above_B() ? StabilityLabel{Stability::StableNode}
                           : StabilityLabel{Stability::Saddle};
    }
    // on the u-axis the growth function crosses downward at the larger root
    case EquilibriumKind::BoundaryU1: return {Stability::Saddle};
    case EquilibriumKind::BoundaryU2: return {Stability::UnstableNode};
    case EquilibriumKind::BoundaryU3: checked = false; return {Stability::RepellingSaddleNode};
    case EquilibriumKind::Positive1: return stable_kind(ev);
    case EquilibriumKind::Positive2: return {Stability::Saddle};
    case EquilibriumKind::Positive3: checked = false; return {Stability::AttractingSaddleNode};
    case EquilibriumKind::LinearOrigin:
    case EquilibriumKind::LinearPositive: return classify_by_eigenvalues(ev);
  }
  return {Stability::Degenerate};
}

inline bool is_linear_kind(EquilibriumKind k) {
  return k == EquilibriumKind::LinearOrigin || k == EquilibriumKind::LinearPositive;
}

}  // namespace detail

/// Labels `eq` by the theorem conditions, fills its eigenvalues, and checks
/// the label against the eigenvalue sign pattern.
inline StabilityLabel classify_equilibrium(const OdeParams& p, Equilibrium& eq) {
  const State x = eq.state();
  const Matrix2 j =
      detail::is_linear_kind(eq.kind) ? jacobian_linear(p, x) : jacobian_nonlinear(p, x);
  eq.eigenvalues = eigenvalues(j);
  bool checked = true;
  eq.stability = detail::theorem_label(p, eq.kind, eq.eigenvalues, checked);
  if (checked && !eigen_concordant(eq.stability, eq.eigenvalues)) {
    std::ostringstream os;
    os << "classification mismatch at " << to_string(eq.kind) << " (" << eq.u << ", " << eq.v
       << "): label " << describe(eq.stability) << " vs eigenvalues " << eq.eigenvalues[0]
       << ", " << eq.eigenvalues[1];
    throw ConsistencyError(os.str());
  }
  return eq.stability;
}

inline StabilityLabel classify_equilibrium(const OdeParams& p, const Equilibrium& eq) {
  Equilibrium copy = eq;
  return classify_equilibrium(p, copy);
}

namespace detail {

inline Equilibrium make_classified(const OdeParams& p, double u, double v, EquilibriumKind kind) {
  Equilibrium eq;
  eq.u = u;
  eq.v = v;
  eq.kind = kind;
  classify_equilibrium(p, eq);
  return eq;
}

inline double v_from_u(const OdeParams& p, double u) {
  return (p.s + p.delta * u) / (p.s + p.delta);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Equilibria of the nonlinear model

/// E0, Ev and the u-axis equilibria (two for m < m0, one double root at m = m0).
inline std::vector<Equilibrium> boundary_equilibria(const OdeParams& p) {
  validate(p, Validation::Strict);
  const DerivedQuantities d = derived_thresholds(p);
  std::vector<Equilibrium> out;
  out.push_back(detail::make_classified(p, 0, 0, EquilibriumKind::Trivial));
  out.push_back(
      detail::make_classified(p, 0, p.s / (p.s + p.delta), EquilibriumKind::BoundaryV));

  const double k = p.h + p.delta;
  if (nearly_equal(p.m, d.m0)) {
    const double u3 = (1 - p.e - p.m * k) / (2 * k);
    if (u3 > 0) out.push_back(detail::make_classified(p, u3, 0, EquilibriumKind::BoundaryU3));
  } else if (p.m < d.m0) {
    const QuadraticRoots r = solve_quadratic(k, p.m * k + p.e - 1, p.m * p.e);
    if (r.count == 2) {
      out.push_back(detail::make_classified(p, r.hi, 0, EquilibriumKind::BoundaryU1));
      out.push_back(detail::make_classified(p, r.lo, 0, EquilibriumKind::BoundaryU2));
    }
  }
  return out;
}

/// Positive equilibria on the line v = (s + delta u)/(s + delta).
inline std::vector<Equilibrium> positive_equilibria(const OdeParams& p) {
  validate(p, Validation::Strict);
  const DerivedQuantities d = derived_thresholds(p);
  const double k = p.h + d.B;
  std::vector<Equilibrium> out;
  auto push = [&](double u, EquilibriumKind kind) {
    out.push_back(detail::make_classified(p, u, detail::v_from_u(p, u), kind));
  };

  if (d.e_equals_B()) {
    const double limit = d.degenerate_limit();
    if (p.m < limit && !nearly_equal(p.m, limit)) push((1 - p.m * k) / k, EquilibriumKind::Positive1);
    return out;
  }
  const double b = p.m * k + p.e - 1 - d.B;
  const double c = p.m * (p.e - d.B);
  if (d.e_below_B()) {
    const QuadraticRoots r = solve_quadratic(k, b, c);
    if (r.count >= 1 && r.hi > 0) push(r.hi, EquilibriumKind::Positive1);
    return out;
  }
  const double mstar = *d.mstar;
  if (nearly_equal(p.m, mstar)) {
    push(-b / (2 * k), EquilibriumKind::Positive3);
  } else if (p.m < mstar) {
    const QuadraticRoots r = solve_quadratic(k, b, c);
    if (r.count == 2) {
      push(r.hi, EquilibriumKind::Positive1);
      push(r.lo, EquilibriumKind::Positive2);
    }
  }
  return out;
}

inline std::vector<Equilibrium> all_equilibria(const OdeParams& p) {
  std::vector<Equilibrium> out = boundary_equilibria(p);
  for (auto& eq : positive_equilibria(p)) out.push_back(eq);
  return out;
}

// ---------------------------------------------------------------------------
// Regime atlas

enum class RegimeCase { A, B, C, D, E, F, G, H, I };

enum class GlobalVerdict { EvGAS, E1GAS, OriginGAS, EhatGAS, Bistable, Undetermined };

inline std::string_view to_string(RegimeCase c) {
  static constexpr std::string_view names[] = {"(a)", "(b)", "(c)", "(d)", "(e)",
                                               "(f)", "(g)", "(h)", "(i)"};
  return names[static_cast<int>(c)];
}

inline std::string_view describe(RegimeCase c) {
  switch (c) {
    case RegimeCase::A: return "e<B";
    case RegimeCase::B: return "e=B, m>1/(h+B)";
    case RegimeCase::C: return "e=B, m=1/(h+B)";
    case RegimeCase::D: return "e=B, m<1/(h+B)";
    case RegimeCase::E: return "B<e<1, 0<m<m0";
    case RegimeCase::F: return "B<e<1, m=m0";
    case RegimeCase::G: return "e>B, m in (m0, m*)";
    case RegimeCase::H: return "e>B, m=m*";
    case RegimeCase::I: return "e>B, m>m*";
  }
  return "?";
}

inline std::string_view to_string(GlobalVerdict v) {
  switch (v) {
    case GlobalVerdict::EvGAS: return "Ev-GAS";
    case GlobalVerdict::E1GAS: return "E1-GAS";
    case GlobalVerdict::OriginGAS: return "Origin-GAS";
    case GlobalVerdict::EhatGAS: return "Ehat-GAS";
    case GlobalVerdict::Bistable: return "Bistable";
    case GlobalVerdict::Undetermined: return "Undetermined";
  }
  return "?";
}

struct RegimeReport {
  DerivedQuantities derived;
  RegimeCase regime = RegimeCase::A;
  std::vector<Equilibrium> equilibria;
  GlobalVerdict verdict = GlobalVerdict::Undetermined;
};

inline RegimeCase regime_case(const OdeParams& p, const DerivedQuantities& d) {
  if (d.e_equals_B()) {
    const double limit = d.degenerate_limit();
    if (nearly_equal(p.m, limit)) return RegimeCase::C;
    return p.m > limit ? RegimeCase::B : RegimeCase::D;
  }
  if (d.e_below_B()) return RegimeCase::A;
  if (nearly_equal(p.m, d.m0)) return RegimeCase::F;
  if (p.m < d.m0) return RegimeCase::E;
  if (nearly_equal(p.m, *d.mstar)) return RegimeCase::H;
  return p.m < *d.mstar ? RegimeCase::G : RegimeCase::I;
}

inline RegimeReport regime_report(const OdeParams& p) {
  validate(p, Validation::Strict);
  RegimeReport r;
  r.derived = derived_thresholds(p);
  r.regime = regime_case(p, r.derived);
  r.equilibria = all_equilibria(p);
  switch (r.regime) {
    case RegimeCase::I: r.verdict = GlobalVerdict::EvGAS; break;
    case RegimeCase::A:
    case RegimeCase::D: r.verdict = GlobalVerdict::E1GAS; break;
    case RegimeCase::E:
    case RegimeCase::F:
    case RegimeCase::G: r.verdict = GlobalVerdict::Bistable; break;
    default: r.verdict = GlobalVerdict::Undetermined; break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Linear-dispersal model

struct LinearEquilibria {
  std::vector<Equilibrium> equilibria;
  GlobalVerdict verdict = GlobalVerdict::Undetermined;
  std::string diagnostics;
};

/// Upper bound on u at any nonnegative equilibrium of the linear model,
/// from summing the two equilibrium equations (dispersal cancels).
inline double linear_u_bound(const OdeParams& p) {
  return (1 + std::sqrt(1 + p.h * p.s)) / (2 * p.h);
}

namespace detail {

inline NewtonResult polish_linear(const OdeParams& p, State x) {
  return newton2([&](State y) { return rhs_linear(p, y); },
                 [&](State y) { return jacobian_linear(p, y); }, x);
}

/// Root of u - H1(H2(u)) on (0, inf) when it is unique (m >= 1/h, delta <= s).
/// Damped fixed-point steps u <- (1-w) u + w H1(H2(u)) are tried inside a
/// bisection bracket; a step is kept only if it stays in the bracket and
/// shrinks the residual, otherwise the bracket is bisected.
inline double linear_fixed_point(const OdeParams& p, std::string& diag) {
  auto psi = [&](double u) { return H1(p, H2(p, u)) - u; };
  double hi = linear_u_bound(p);
  int grow = 0;
  while (!(psi(hi) > 0)) {
    if (++grow > 60) throw NumericError("linear fixed point: no upper bracket");
    hi *= 2;
  }
  double lo = 0.5 * hi;
  int shrink = 0;
  while (!(psi(lo) < 0)) {
    if (++shrink > 200) throw NumericError("linear fixed point: no lower bracket");
    lo *= 0.5;
  }
  constexpr double omega = 0.5;
  int damped = 0, bisections = 0;
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 400 && hi - lo > 4e-16 * hi; ++it) {
    const double f = psi(u);
    if (f == 0) {
      lo = hi = u;
      break;
    }
    (f < 0 ? lo : hi) = u;
    const double cand = u + omega * f;
    if (cand > lo && cand < hi && std::abs(psi(cand)) < std::abs(f)) {
      u = cand;
      ++damped;
    } else {
      u = 0.5 * (lo + hi);
      ++bisections;
    }
  }
  std::ostringstream os;
  os << "fixed point bracket [" << lo << ", " << hi << "], damped steps " << damped
     << ", bisections " << bisections;
  diag = os.str();
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline LinearEquilibria linear_equilibria(const OdeParams& p) {
  validate(p, Validation::Relaxed);
  LinearEquilibria r;
  auto make = [&](State x, EquilibriumKind kind) {
    return detail::make_classified(p, x.u, x.v, kind);
  };
  const bool allee_large = p.m > 1 / p.h || nearly_equal(p.m, 1 / p.h);
  const bool origin_gas = allee_large && p.e > p.s && p.delta > p.e * p.s / (p.e - p.s);
  const bool unique_positive = allee_large && p.delta <= p.s;

  Equilibrium origin = make({0, 0}, EquilibriumKind::LinearOrigin);

  if (origin_gas) {
    if (!is_attracting(origin.stability)) {
      throw ConsistencyError("origin expected stable under no-positive-equilibrium hypotheses");
    }
    r.equilibria.push_back(origin);
    r.verdict = GlobalVerdict::OriginGAS;
    return r;
  }

  if (unique_positive) {
    if (origin.stability.type != Stability::Saddle) {
      throw ConsistencyError("origin expected to be a saddle when delta <= s");
    }
    const double u = detail::linear_fixed_point(p, r.diagnostics);
    const NewtonResult pol = detail::polish_linear(p, {u, H2(p, u)});
    if (!pol.converged) {
      throw NumericError("linear positive equilibrium: Newton polish failed (" + r.diagnostics +
                         ")");
    }
    Equilibrium ehat = make(pol.x, EquilibriumKind::LinearPositive);
    if (!is_attracting(ehat.stability)) {
      throw ConsistencyError("positive equilibrium of the linear model expected stable");
    }
    r.equilibria.push_back(origin);
    r.equilibria.push_back(ehat);
    r.verdict = p.delta < (p.s - p.e) / 2 ? GlobalVerdict::EhatGAS : GlobalVerdict::Undetermined;
    return r;
  }

  // Neither sufficient condition holds: enumerate sign changes of
  // u - H1(H2(u)) on a uniform grid.
  r.equilibria.push_back(origin);
  auto psi = [&](double u) { return H1(p, H2(p, u)) - u; };
  const double top = 1.01 * linear_u_bound(p);
  constexpr int cells = 4000;
  double prev_u = top / cells;
  double prev = psi(prev_u);
  int found = 0;
  for (int i = 2; i <= cells; ++i) {
    const double u = top * i / cells;
    const double f = psi(u);
    if (prev == 0 || (prev < 0) != (f < 0)) {
      const double root = prev == 0 ? prev_u : bisect(psi, prev_u, u);
      const double v = H2(p, root);
      if (v > 0) {
        const NewtonResult pol = detail::polish_linear(p, {root, v});
        if (pol.converged && pol.x.u > 0 && pol.x.v > 0) {
          r.equilibria.push_back(make(pol.x, EquilibriumKind::LinearPositive));
          ++found;
        }
      }
    }
    prev_u = u;
    prev = f;
  }
  std::ostringstream os;
  os << "grid enumeration on (0, " << top << "] with " << cells << " cells: " << found
     << " positive equilibria";
  r.diagnostics = os.str();
  r.verdict = GlobalVerdict::Undetermined;
  return r;
}

}  // namespace patchdyn

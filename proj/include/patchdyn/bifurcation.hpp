#pragma once

// Saddle-node certificates, Allee-parameter sweeps and total-abundance
// sensitivity for the nonlinear-dispersal model.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "patchdyn/equilibria.hpp"
#include "patchdyn/errors.hpp"
#include "patchdyn/linalg.hpp"
#include "patchdyn/model.hpp"
#include "patchdyn/parallel.hpp"

namespace patchdyn {

/// Where the fold happens: interior (E1/E2 collide at m*) or on the u-axis
/// (the two axis equilibria collide at m0).
enum class FoldSite { Interior, Boundary };

inline constexpr double kZeroEigenTol = 1e-8;
inline constexpr double kTransversalityTol = 1e-8;

struct SotomayorReport {
  FoldSite site = FoldSite::Interior;
  double m = 0;
  State point{};
  Matrix2 jacobian{};
  Eigenpair eigenvalues{};
  std::array<double, 2> alpha{};  ///< right null vector, alpha[0] = 1
  std::array<double, 2> beta{};   ///< left null vector, beta[0] = 1
  double eta_fm = 0;              ///< beta . dF/dm
  double eta_d2 = 0;              ///< beta . D^2F(alpha, alpha), central differences
  /// Published closed forms: -u^2/(m+u)^2 and, interior only,
  /// -sqrt(e-B)(h+B). NaN where no closed form exists.
  double closed_form_eta_fm = std::numeric_limits<double>::quiet_NaN();
  double closed_form_eta_d2 = std::numeric_limits<double>::quiet_NaN();
  /// Boundary only: normal-form coefficient -(h+delta) sqrt(e)/(1-sqrt(e)).
  double q0 = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
};

namespace detail {

/// Null vector of a singular 2x2 matrix with first component 1, taken from
/// the row whose second coefficient is larger in magnitude.
inline std::array<double, 2> null_vector(double a1, double b1, double a2, double b2) {
  // rows: a_i + b_i x = 0
  if (std::abs(b1) >= std::abs(b2)) return {1.0, b1 != 0 ? -a1 / b1 : 0.0};
  return {1.0, -a2 / b2};
}

}  // namespace detail

/// Sotomayor transversality check at the fold point for the current p.m.
inline SotomayorReport sotomayor_check(const OdeParams& p, FoldSite site = FoldSite::Interior) {
  validate(p, Validation::Strict);
  const DerivedQuantities d = derived_thresholds(p);
  SotomayorReport r;
  r.site = site;
  r.m = p.m;

  if (site == FoldSite::Interior) {
    if (!d.e_above_B()) {
      throw PreconditionError("interior saddle-node needs B < e < 1 (no m* otherwise)");
    }
    const double k = p.h + d.B;
    const double u3 = (1 + d.B - p.e - p.m * k) / (2 * k);
    r.point = {u3, detail::v_from_u(p, u3)};
  } else {
    const double k = p.h + p.delta;
    r.point = {(1 - p.e - p.m * k) / (2 * k), 0.0};
  }
  if (!(r.point.u > 0)) throw PreconditionError("fold point is not in the positive quadrant");

  r.jacobian = jacobian_nonlinear(p, r.point);
  r.eigenvalues = eigenvalues(r.jacobian);
  const double l0 = r.eigenvalues[0].real(), l1 = r.eigenvalues[1].real();
  const bool first_zero = std::abs(l0) <= std::abs(l1);
  const double zero = first_zero ? l0 : l1;
  const double other = first_zero ? l1 : l0;
  if (is_complex_pair(r.eigenvalues) || std::abs(zero) > kZeroEigenTol) {
    std::ostringstream os;
    os << "no zero eigenvalue at m = " << p.m << " (smallest |lambda| = " << std::abs(zero)
       << "); parameters are not at a saddle-node";
    throw PreconditionError(os.str());
  }
  if (site == FoldSite::Interior ? !(other < 0) : !(other > 0)) {
    throw PreconditionError("nonzero eigenvalue has the wrong sign for this fold site");
  }

  const Matrix2& j = r.jacobian;
  r.alpha = detail::null_vector(j.j11, j.j12, j.j21, j.j22);
  r.beta = detail::null_vector(j.j11, j.j21, j.j12, j.j22);

  const State fm = rhs_nonlinear_dm(p, r.point);
  r.eta_fm = r.beta[0] * fm.u + r.beta[1] * fm.v;

  const double step = 1e-4 * std::max(1.0, std::hypot(r.point.u, r.point.v));
  const State fp = rhs_nonlinear(p, {r.point.u + step * r.alpha[0], r.point.v + step * r.alpha[1]});
  const State f0 = rhs_nonlinear(p, r.point);
  const State fn = rhs_nonlinear(p, {r.point.u - step * r.alpha[0], r.point.v - step * r.alpha[1]});
  const double d2u = (fp.u - 2 * f0.u + fn.u) / (step * step);
  const double d2v = (fp.v - 2 * f0.v + fn.v) / (step * step);
  r.eta_d2 = r.beta[0] * d2u + r.beta[1] * d2v;

  const double u = r.point.u;
  r.closed_form_eta_fm = -u * u / ((p.m + u) * (p.m + u));
  if (site == FoldSite::Interior) {
    r.closed_form_eta_d2 = -std::sqrt(p.e - d.B) * (p.h + d.B);
  } else {
    const double se = std::sqrt(p.e);
    r.q0 = -(p.h + p.delta) * se / (1 - se);
  }
  r.certified =
      std::abs(r.eta_fm) > kTransversalityTol && std::abs(r.eta_d2) > kTransversalityTol;
  return r;
}

/// Moves m to the fold threshold (m* or m0) and runs the check there.
inline SotomayorReport sotomayor_at_fold(OdeParams p, FoldSite site = FoldSite::Interior) {
  validate(p, Validation::Strict);
  const DerivedQuantities d = derived_thresholds(p);
  if (site == FoldSite::Interior) {
    if (!d.mstar) throw PreconditionError("interior saddle-node needs B < e < 1 (no m* otherwise)");
    p.m = *d.mstar;
  } else {
    p.m = d.m0;
  }
  return sotomayor_check(p, site);
}

// ---------------------------------------------------------------------------
// Allee sweep

struct DiagramRow {
  double m = 0;
  std::string branch;
  double u = 0;
  double v = 0;
  StabilityLabel stability;
  bool is_sn_marker = false;
};

struct BifurcationDiagram {
  std::vector<DiagramRow> rows;     ///< ordered by m, markers interleaved
  std::vector<DiagramRow> markers;  ///< saddle-node rows only
};

struct SweepOptions {
  bool include_boundary = false;
};

namespace detail {

inline double locate_fold(const OdeParams& base, double lo, double hi, bool interior) {
  auto two_roots = [&](double m) {
    OdeParams q = base;
    q.m = m;
    if (interior) return positive_equilibria(q).size() == 2;
    int axis = 0;
    for (const auto& eq : boundary_equilibria(q)) {
      if (eq.kind == EquilibriumKind::BoundaryU1 || eq.kind == EquilibriumKind::BoundaryU2) ++axis;
    }
    return axis == 2;
  };
  const bool lo_two = two_roots(lo);
  for (int i = 0; i < 100 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (two_roots(mid) == lo_two ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline BifurcationDiagram sweep_allee(const OdeParams& p, double m_lo, double m_hi, int steps,
                                      const SweepOptions& opt = {}) {
  if (!(m_lo < m_hi)) throw ValidationError("sweep needs m_lo < m_hi");
  if (steps < 2) throw ValidationError("sweep needs at least 2 steps");
  if (!(m_lo > 0)) throw ValidationError("sweep needs m_lo > 0");
  validate(p, Validation::Strict);

  std::vector<double> ms(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    ms[i] = i + 1 == steps ? m_hi : m_lo + (m_hi - m_lo) * i / (steps - 1);
  }

  std::vector<std::vector<DiagramRow>> per_m(ms.size());
  std::vector<int> interior_count(ms.size()), axis_count(ms.size());
  parallel_for(ms.size(), [&](std::size_t i) {
    OdeParams q = p;
    q.m = ms[i];
    auto& rows = per_m[i];
    if (opt.include_boundary) {
      for (const auto& eq : boundary_equilibria(q)) {
        rows.push_back({q.m, std::string(to_string(eq.kind)), eq.u, eq.v, eq.stability, false});
        if (eq.kind == EquilibriumKind::BoundaryU1 || eq.kind == EquilibriumKind::BoundaryU2) {
          ++axis_count[i];
        }
      }
    }
    const auto pos = positive_equilibria(q);
    interior_count[i] = static_cast<int>(pos.size());
    for (const auto& eq : pos) {
      rows.push_back({q.m, std::string(to_string(eq.kind)), eq.u, eq.v, eq.stability, false});
    }
  });

  BifurcationDiagram diagram;
  auto make_marker = [&](double m_sn, bool interior) {
    OdeParams q = p;
    q.m = m_sn;
    DiagramRow row;
    row.m = m_sn;
    row.is_sn_marker = true;
    if (interior) {
      const DerivedQuantities d = derived_thresholds(q);
      const double k = q.h + d.B;
      row.u = (1 + d.B - q.e - q.m * k) / (2 * k);
      row.v = detail::v_from_u(q, row.u);
      row.branch = "SN";
      row.stability = {Stability::AttractingSaddleNode};
    } else {
      const double k = q.h + q.delta;
      row.u = (1 - q.e - q.m * k) / (2 * k);
      row.v = 0;
      row.branch = "SN-axis";
      row.stability = {Stability::RepellingSaddleNode};
    }
    return row;
  };

  for (std::size_t i = 0; i < ms.size(); ++i) {
    for (auto& row : per_m[i]) diagram.rows.push_back(std::move(row));
    if (i + 1 == ms.size()) break;
    std::vector<DiagramRow> between;
    if ((interior_count[i] == 2) != (interior_count[i + 1] == 2)) {
      between.push_back(make_marker(detail::locate_fold(p, ms[i], ms[i + 1], true), true));
    }
    if (opt.include_boundary && (axis_count[i] == 2) != (axis_count[i + 1] == 2)) {
      between.push_back(make_marker(detail::locate_fold(p, ms[i], ms[i + 1], false), false));
    }
    std::sort(between.begin(), between.end(),
              [](const DiagramRow& a, const DiagramRow& b) { return a.m < b.m; });
    for (auto& row : between) {
      diagram.markers.push_back(row);
      diagram.rows.push_back(std::move(row));
    }
  }
  return diagram;
}

// ---------------------------------------------------------------------------
// Total-abundance sensitivity

struct SensitivityReport {
  double m = 0;
  double u1 = 0;
  double v1 = 0;
  double total = 0;  ///< T = u1 + v1
  double C = 0;      ///< (h+B) - m/(m+u1)^2
  double du1_dm = 0;
  double dv1_dm = 0;
  double dT_dm = 0;
};

/// Derivatives of E1 and T = u1 + v1 with respect to m, valid where E1 is
/// globally attracting (e < B, or e = B with m < 1/(h+B)).
inline SensitivityReport abundance_sensitivity(const OdeParams& p) {
  validate(p, Validation::Strict);
  const DerivedQuantities d = derived_thresholds(p);
  const bool regime_ok =
      d.e_below_B() || (d.e_equals_B() && p.m < d.degenerate_limit() &&
                        !nearly_equal(p.m, d.degenerate_limit()));
  if (!regime_ok) {
    throw DomainError("abundance sensitivity requires e < B, or e = B with m < 1/(h+B)");
  }
  const auto pos = positive_equilibria(p);
  if (pos.empty()) throw NumericError("no positive equilibrium found in the E1 regime");
  SensitivityReport r;
  r.m = p.m;
  r.u1 = pos.front().u;
  r.v1 = pos.front().v;
  r.total = r.u1 + r.v1;
  const double mu = p.m + r.u1;
  r.C = (p.h + d.B) - p.m / (mu * mu);
  r.du1_dm = -r.u1 / (r.C * mu * mu);
  r.dv1_dm = p.delta / (p.s + p.delta) * r.du1_dm;
  r.dT_dm = r.du1_dm + r.dv1_dm;
  return r;
}

inline SensitivityReport abundance_sensitivity(OdeParams p, double m) {
  p.m = m;
  return abundance_sensitivity(p);
}

}  // namespace patchdyn

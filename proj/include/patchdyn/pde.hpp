#pragma once

// Method-of-lines solver for the spatially explicit two-patch systems on
// [0, L] with homogeneous Neumann boundaries:
//
//   u_t = D1[u] + s1(x) u (u/(m(x)+u)   - e(x)  - h(x)  u)
//   v_t = D2[v] + s(x)  v (v/(m1(x)+v)  - e1(x) - h1(x) v)
//
// with D[w] = delta w_xx (linear) or delta w w_xx (nonlinear). The grid is
// cell centred; mirror ghosts make every boundary flux exactly zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "patchdyn/dopri5.hpp"
#include "patchdyn/errors.hpp"

namespace patchdyn {

enum class DispersalKind { Linear, Nonlinear };

/// Pointwise: delta w_i (second difference), as written. Divergence:
/// (delta w w_x)_x with face-averaged w, offered for comparison.
enum class NonlinearForm { Pointwise, Divergence };

inline std::string_view to_string(DispersalKind k) {
  return k == DispersalKind::Linear ? "linear" : "nonlinear";
}
inline std::string_view to_string(NonlinearForm f) {
  return f == NonlinearForm::Pointwise ? "pointwise" : "divergence";
}

/// Value on [0, L1) and on [L1, L].
struct PiecewiseConstant {
  double left = 0;
  double right = 0;

  [[nodiscard]] double at(bool in_left) const { return in_left ? left : right; }
  [[nodiscard]] double min() const { return std::min(left, right); }
  [[nodiscard]] double max() const { return std::max(left, right); }
  friend bool operator==(const PiecewiseConstant&, const PiecewiseConstant&) = default;
};

/// Reaction parameters of one patch.
struct PatchValues {
  double m = 0;
  double e = 0;
  double h = 1;
  double s = 1;
};

inline constexpr PatchValues kDefaultAlleePatch{0.7, 0.04, 0.9, 0.9};
inline constexpr double kDefaultFreeGrowth = 0.9;

struct CoefficientProfile {
  PiecewiseConstant m, m1, e, e1, h, h1, s, s1;
  bool patch_structure = true;  ///< false for spatially uniform test profiles

  /// Allee patch on [0, L1), Allee-free patch on [L1, L] with growth rate
  /// s_free. The patch identities fix everything else.
  static CoefficientProfile patchy(PatchValues allee = kDefaultAlleePatch,
                                   double s_free = kDefaultFreeGrowth) {
    CoefficientProfile c;
    c.m = {allee.m, 0};
    c.e = {allee.e, 0};
    c.h = {allee.h, 1};
    c.s = {allee.s, s_free};
    c.m1 = {c.m.left, 0};
    c.e1 = {c.e.left, 0};
    c.h1 = {c.h.left, 1};
    c.s1 = {1, c.s.right};
    return c;
  }

  /// Constant coefficients; u and v see the same reaction. Not patch structured.
  static CoefficientProfile uniform(PatchValues u_patch, PatchValues v_patch) {
    CoefficientProfile c;
    c.m = {u_patch.m, u_patch.m};
    c.e = {u_patch.e, u_patch.e};
    c.h = {u_patch.h, u_patch.h};
    c.s1 = {u_patch.s, u_patch.s};
    c.m1 = {v_patch.m, v_patch.m};
    c.e1 = {v_patch.e, v_patch.e};
    c.h1 = {v_patch.h, v_patch.h};
    c.s = {v_patch.s, v_patch.s};
    c.patch_structure = false;
    return c;
  }

  [[nodiscard]] bool identities_hold() const {
    return m1.left == m.left && m1.right == 0 && m.right == 0 && e1.left == e.left &&
           e1.right == 0 && e.right == 0 && h1.left == h.left && h1.right == 1 && h.right == 1 &&
           s1.left == 1 && s1.right == s.right;
  }

  /// Half the smallest of h, h1, s, s1: any value strictly inside
  /// (0, min) serves as the lower bound C1.
  [[nodiscard]] double lower_bound() const {
    return 0.5 * std::min({h.min(), h1.min(), s.min(), s1.min()});
  }
};

inline void validate(const CoefficientProfile& c) {
  const std::pair<const char*, const PiecewiseConstant*> nonneg[] = {
      {"m", &c.m}, {"m1", &c.m1}, {"e", &c.e}, {"e1", &c.e1}};
  const std::pair<const char*, const PiecewiseConstant*> positive[] = {
      {"h", &c.h}, {"h1", &c.h1}, {"s", &c.s}, {"s1", &c.s1}};
  for (auto [name, pc] : nonneg) {
    for (double x : {pc->left, pc->right}) {
      if (!std::isfinite(x) || x < 0) {
        throw ValidationError(std::string("coefficient ") + name + " must be finite and >= 0");
      }
    }
  }
  for (auto [name, pc] : positive) {
    for (double x : {pc->left, pc->right}) {
      if (!std::isfinite(x) || !(x > 0)) {
        throw ValidationError(std::string("coefficient ") + name + " must be finite and > 0");
      }
    }
  }
  if (c.patch_structure && !c.identities_hold()) {
    throw ValidationError("coefficient profile violates the patch identities");
  }
}

/// Initial field: base + quadratic * x^2 + sum of amp * exp(-((x-c)/w)^2),
/// or explicit cell samples when `samples` is non-empty.
struct FieldInit {
  struct Bump {
    double center = 0;
    double width = 1;
    double amplitude = 1;
  };
  double base = 0;
  double quadratic = 0;
  std::vector<Bump> bumps;
  std::vector<double> samples;

  [[nodiscard]] double value(double x) const {
    double w = base + quadratic * x * x;
    for (const Bump& b : bumps) {
      const double z = (x - b.center) / b.width;
      w += b.amplitude * std::exp(-z * z);
    }
    return w;
  }

  static FieldInit flat(double c) { return {c, 0, {}, {}}; }
};

struct PdeConfig {
  double L = 3.14159265358979323846;
  double L1 = 3.14159265358979323846 / 2;
  int N = 100;
  double delta1 = 0.4;
  double delta2 = 0.004;
  DispersalKind kind = DispersalKind::Linear;
  NonlinearForm form = NonlinearForm::Pointwise;
  CoefficientProfile profile = CoefficientProfile::patchy();
  FieldInit u0 = FieldInit::flat(1);
  FieldInit v0 = FieldInit::flat(1);
  double t_end = 50;
  double tol = 1e-8;
  int snapshots = 51;      ///< equally spaced output times including 0 and t_end
  double dt_floor = 1e-12; ///< absolute step floor; below it the run fails
};

inline void validate(const PdeConfig& c) {
  if (!std::isfinite(c.L) || !(c.L > 0)) throw ValidationError("L must be positive");
  if (!(c.L1 > 0 && c.L1 < c.L)) throw ValidationError("L1 must lie in (0, L)");
  if (c.N < 4) throw ValidationError("N must be at least 4");
  if (!(c.delta1 > 0) || !(c.delta2 > 0) || !std::isfinite(c.delta1) || !std::isfinite(c.delta2)) {
    throw ValidationError("delta1 and delta2 must be positive");
  }
  if (!(c.t_end > 0) || !std::isfinite(c.t_end)) throw ValidationError("t_end must be positive");
  if (!(c.tol >= 1e-12 && c.tol <= 1e-3)) throw ValidationError("tol must lie in [1e-12, 1e-3]");
  if (c.snapshots < 2) throw ValidationError("snapshots must be at least 2");
  if (!(c.dt_floor > 0)) throw ValidationError("dt_floor must be positive");
  for (const FieldInit* f : {&c.u0, &c.v0}) {
    if (!f->samples.empty() && f->samples.size() != static_cast<std::size_t>(c.N)) {
      throw ValidationError("explicit initial samples must have N entries");
    }
  }
  validate(c.profile);
}

struct DiscretizedProblem {
  int N = 0;
  double L = 0;
  double dx = 0;
  double L1 = 0;      ///< after snapping to a cell edge
  int patch_edge = 0; ///< cells [0, patch_edge) form the Allee patch
  std::vector<double> x;
  // per-cell coefficients
  std::vector<double> m, m1, e, e1, h, h1, s, s1;
  double delta1 = 0;
  double delta2 = 0;
  DispersalKind kind = DispersalKind::Linear;
  NonlinearForm form = NonlinearForm::Pointwise;
  std::vector<double> u0, v0;
  double t_end = 0;
  double tol = 0;
  int snapshots = 0;
  double dt_floor = 0;
  std::vector<std::string> warnings;
};

inline DiscretizedProblem build_pde_problem(const PdeConfig& c) {
  validate(c);
  DiscretizedProblem p;
  p.N = c.N;
  p.L = c.L;
  p.dx = c.L / c.N;
  const long edge = std::lround(c.L1 / p.dx);
  p.patch_edge = static_cast<int>(std::clamp<long>(edge, 1, c.N - 1));
  p.L1 = p.patch_edge * p.dx;
  if (std::abs(p.L1 - c.L1) > 1e-12 * c.L) {
    std::ostringstream os;
    os.precision(12);
    os << "L1=" << c.L1 << " is not a cell edge; snapped to " << p.L1;
    p.warnings.push_back(os.str());
  }
  p.delta1 = c.delta1;
  p.delta2 = c.delta2;
  p.kind = c.kind;
  p.form = c.form;
  p.t_end = c.t_end;
  p.tol = c.tol;
  p.snapshots = c.snapshots;
  p.dt_floor = c.dt_floor;

  const std::size_t n = static_cast<std::size_t>(c.N);
  p.x.resize(n);
  for (auto* v : {&p.m, &p.m1, &p.e, &p.e1, &p.h, &p.h1, &p.s, &p.s1, &p.u0, &p.v0}) v->resize(n);
  const CoefficientProfile& cp = c.profile;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = (static_cast<double>(i) + 0.5) * p.dx;
    const bool left = static_cast<int>(i) < p.patch_edge;
    p.x[i] = xi;
    p.m[i] = cp.m.at(left);
    p.m1[i] = cp.m1.at(left);
    p.e[i] = cp.e.at(left);
    p.e1[i] = cp.e1.at(left);
    p.h[i] = cp.h.at(left);
    p.h1[i] = cp.h1.at(left);
    p.s[i] = cp.s.at(left);
    p.s1[i] = cp.s1.at(left);
    p.u0[i] = c.u0.samples.empty() ? c.u0.value(xi) : c.u0.samples[i];
    p.v0[i] = c.v0.samples.empty() ? c.v0.value(xi) : c.v0.samples[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p.u0[i] >= 0) || !(p.v0[i] >= 0) || !std::isfinite(p.u0[i]) || !std::isfinite(p.v0[i])) {
      throw ValidationError("initial data must be finite and nonnegative");
    }
  }
  return p;
}

/// Face fluxes (w_{i+1} - w_i)/dx for faces 0..N; faces 0 and N are the
/// boundaries and are exactly zero.
inline void face_fluxes(const double* w, int n, double dx, double* flux) {
  flux[0] = 0.0;
  flux[n] = 0.0;
  for (int i = 1; i < n; ++i) flux[i] = (w[i] - w[i - 1]) / dx;
}

/// Second difference in flux form; equals the central stencil with mirror ghosts.
inline std::vector<double> laplacian(const std::vector<double>& w, double dx) {
  const int n = static_cast<int>(w.size());
  std::vector<double> flux(static_cast<std::size_t>(n) + 1), out(w.size());
  face_fluxes(w.data(), n, dx, flux.data());
  for (int i = 0; i < n; ++i) out[i] = (flux[i + 1] - flux[i]) / dx;
  return out;
}

/// s w (w/(m+w) - e - h w); the saturation term is 0 when m + w = 0.
inline double patch_reaction(double w, double m, double e, double h, double s) {
  const double denom = m + w;
  const double sat = denom > 0 ? w / denom : 0.0;
  return s * w * (sat - e - h * w);
}

namespace detail {

inline void dispersal(const DiscretizedProblem& p, const double* w, double delta, double* out,
                      std::vector<double>& flux) {
  const int n = p.N;
  face_fluxes(w, n, p.dx, flux.data());
  if (p.kind == DispersalKind::Nonlinear && p.form == NonlinearForm::Divergence) {
    for (int i = 1; i < n; ++i) flux[i] *= 0.5 * (w[i] + w[i - 1]);
  }
  for (int i = 0; i < n; ++i) {
    const double lap = (flux[i + 1] - flux[i]) / p.dx;
    out[i] = p.kind == DispersalKind::Nonlinear && p.form == NonlinearForm::Pointwise
                 ? delta * w[i] * lap
                 : delta * lap;
  }
}

}  // namespace detail

/// Semi-discrete right-hand side; y and dydt hold [u_0..u_{N-1}, v_0..v_{N-1}].
inline void evaluate_rhs(const DiscretizedProblem& p, const std::vector<double>& y,
                         std::vector<double>& dydt) {
  const std::size_t n = static_cast<std::size_t>(p.N);
  dydt.resize(2 * n);
  thread_local std::vector<double> flux;
  flux.resize(n + 1);
  const double* u = y.data();
  const double* v = y.data() + n;
  detail::dispersal(p, u, p.delta1, dydt.data(), flux);
  detail::dispersal(p, v, p.delta2, dydt.data() + n, flux);
  for (std::size_t i = 0; i < n; ++i) {
    dydt[i] += patch_reaction(u[i], p.m[i], p.e[i], p.h[i], p.s1[i]);
    dydt[n + i] += patch_reaction(v[i], p.m1[i], p.e1[i], p.h1[i], p.s[i]);
  }
}

/// Largest explicit step allowed by the diffusion limit 0.4 dx^2 / delta_eff.
inline double stability_ceiling(const DiscretizedProblem& p, const std::vector<double>& y,
                                 std::size_t* worst = nullptr) {
  const std::size_t n = static_cast<std::size_t>(p.N);
  double deff = std::max(p.delta1, p.delta2);
  std::size_t arg = 0;
  if (p.kind == DispersalKind::Nonlinear) {
    deff = 0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
      const double d = (i < n ? p.delta1 : p.delta2) * y[i];
      if (d > deff) {
        deff = d;
        arg = i;
      }
    }
  }
  if (worst) *worst = arg;
  if (deff <= 0) return std::numeric_limits<double>::infinity();
  return 0.4 * p.dx * p.dx / deff;
}

enum class PdeStatus { Completed, Failed };

struct PdeSeries {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> u;  ///< one field per snapshot
  std::vector<std::vector<double>> v;
  PdeStatus status = PdeStatus::Completed;
  std::optional<int> failure_cell;        ///< cell index of the offending node
  std::optional<char> failure_component;  ///< 'u' or 'v'
  double failure_time = std::numeric_limits<double>::quiet_NaN();
  long accepted_steps = 0;
  long rejected_steps = 0;
  std::vector<std::string> warnings;
};

/// Integrates the semi-discrete system from prob.u0, prob.v0 to t_end with
/// error tolerance tol, recording prob.snapshots equally spaced snapshots.
inline PdeSeries integrate_pde(const DiscretizedProblem& prob, double t_end, double tol) {
  if (!(t_end > 0)) throw ValidationError("t_end must be positive");
  if (!(tol >= 1e-12 && tol <= 1e-3)) throw ValidationError("tol must lie in [1e-12, 1e-3]");
  const std::size_t n = static_cast<std::size_t>(prob.N);
  PdeSeries out;
  out.x = prob.x;
  out.warnings = prob.warnings;

  std::vector<double> y(2 * n);
  std::copy(prob.u0.begin(), prob.u0.end(), y.begin());
  std::copy(prob.v0.begin(), prob.v0.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
  auto record = [&](double t) {
    out.times.push_back(t);
    out.u.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    out.v.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
  };
  record(0.0);

  StepperOptions so;
  so.rtol = so.atol = tol;
  so.min_step = prob.dt_floor;
  DormandPrince<std::vector<double>> stepper(so);
  auto rhs = [&](double, const std::vector<double>& yy, std::vector<double>& dy) {
    evaluate_rhs(prob, yy, dy);
  };
  auto ceiling = [&](const std::vector<double>& yy) { return stability_ceiling(prob, yy); };
  auto observer = [](double, const std::vector<double>&) { return true; };

  const int segments = prob.snapshots - 1;
  double t = 0;
  for (int k = 1; k <= segments; ++k) {
    const double target = k == segments ? t_end : t_end * k / segments;
    const StepStatus st = stepper.advance(rhs, t, y, target, ceiling, observer);
    if (st == StepStatus::StepFailure) {
      out.status = PdeStatus::Failed;
      out.failure_time = t;
      std::size_t worst = stepper.stats().failure_index;
      if (stability_ceiling(prob, y, &worst) >= prob.dt_floor * std::max(1.0, t)) {
        worst = stepper.stats().failure_index;
      }
      out.failure_cell = static_cast<int>(worst % n);
      out.failure_component = worst < n ? 'u' : 'v';
      break;
    }
    record(t);
  }
  out.accepted_steps = stepper.stats().accepted;
  out.rejected_steps = stepper.stats().rejected;
  return out;
}

inline PdeSeries integrate_pde(const DiscretizedProblem& prob) {
  return integrate_pde(prob, prob.t_end, prob.tol);
}

// ---------------------------------------------------------------------------
// Monitoring functionals

struct FunctionalRow {
  double t;
  double min_u, max_u, min_v, max_v;
  double mass_u, mass_v;
  double logmass_u;
  double gronwall;
};

struct Functionals {
  std::vector<FunctionalRow> rows;
  double comparison_bound = 0;  ///< max(|u0|_inf, max_x (1-e)/h)
};

/// Gronwall monitor G = d/dt sum log(u_i) dx + sum s1 h u dx - sum s1 (1-e) dx,
/// with the time derivative taken from the semi-discrete right-hand side.
inline double gronwall_monitor(const DiscretizedProblem& prob, const std::vector<double>& u,
                               const std::vector<double>& v) {
  const std::size_t n = static_cast<std::size_t>(prob.N);
  std::vector<double> y(2 * n), dy;
  std::copy(u.begin(), u.end(), y.begin());
  std::copy(v.begin(), v.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
  evaluate_rhs(prob, y, dy);
  double g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(u[i] > 0)) throw DomainError("log functional needs u > 0 at every node");
    g += dy[i] / u[i] + prob.s1[i] * prob.h[i] * u[i] - prob.s1[i] * (1 - prob.e[i]);
  }
  return g * prob.dx;
}

inline Functionals pde_functionals(const PdeSeries& series, const DiscretizedProblem& prob) {
  Functionals f;
  const double dx = prob.dx;
  double u0max = 0, ratio = 0;
  for (std::size_t i = 0; i < prob.u0.size(); ++i) {
    u0max = std::max(u0max, prob.u0[i]);
    ratio = std::max(ratio, (1 - prob.e[i]) / prob.h[i]);
  }
  f.comparison_bound = std::max(u0max, ratio);
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const auto& u = series.u[k];
    const auto& v = series.v[k];
    FunctionalRow r{};
    r.t = series.times[k];
    const auto [umin, umax] = std::minmax_element(u.begin(), u.end());
    const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
    r.min_u = *umin;
    r.max_u = *umax;
    r.min_v = *vmin;
    r.max_v = *vmax;
    double mu = 0, mv = 0, lu = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      mu += u[i];
      mv += v[i];
      if (!(u[i] > 0)) throw DomainError("log functional needs u > 0 at every node");
      lu += std::log(u[i]);
    }
    r.mass_u = mu * dx;
    r.mass_v = mv * dx;
    r.logmass_u = lu * dx;
    r.gronwall = gronwall_monitor(prob, u, v);
    f.rows.push_back(r);
  }
  return f;
}

}  // namespace patchdyn

#pragma once

// Reference computations used to check the library. They share no code
// with it: the model equations are re-typed here, Jacobians come from
// finite differences, roots from sign-change scans, trajectories from
// fixed-step classical RK4.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

struct Pt {
  double u;
  double v;
};

struct Params {
  double m, e, h, delta, s;
};

inline Pt f_nonlinear(const Params& p, Pt x) {
  const double u = x.u, v = x.v;
  return {u * u / (p.m + u) - p.e * u - p.h * u * u + p.delta * u * v - p.delta * u * u,
          p.s * v - p.s * v * v + p.delta * u * v - p.delta * v * v};
}

inline Pt f_linear(const Params& p, Pt x) {
  const double u = x.u, v = x.v;
  return {u * u / (p.m + u) - p.e * u - p.h * u * u + p.delta * v - p.delta * u,
          p.s * v - p.s * v * v + p.delta * u - p.delta * v};
}

using Field = std::function<Pt(Pt)>;

/// Central-difference Jacobian, row-major {d1/du, d1/dv, d2/du, d2/dv}.
inline std::array<double, 4> fd_jacobian(const Field& f, Pt x, double h = 1e-6) {
  const Pt fu_p = f({x.u + h, x.v}), fu_m = f({x.u - h, x.v});
  const Pt fv_p = f({x.u, x.v + h}), fv_m = f({x.u, x.v - h});
  return {(fu_p.u - fu_m.u) / (2 * h), (fv_p.u - fv_m.u) / (2 * h), (fu_p.v - fu_m.v) / (2 * h),
          (fv_p.v - fv_m.v) / (2 * h)};
}

/// Newton iteration with a finite-difference Jacobian.
inline std::optional<Pt> newton_fd(const Field& f, Pt x, double tol = 1e-14, int max_iter = 100) {
  for (int it = 0; it < max_iter; ++it) {
    const Pt r = f(x);
    if (std::hypot(r.u, r.v) < tol) return x;
    const auto j = fd_jacobian(f, x, 1e-7 * std::max(1.0, std::hypot(x.u, x.v)));
    const double det = j[0] * j[3] - j[1] * j[2];
    if (det == 0 || !std::isfinite(det)) return std::nullopt;
    x = {x.u - (j[3] * r.u - j[1] * r.v) / det, x.v - (-j[2] * r.u + j[0] * r.v) / det};
  }
  const Pt r = f(x);
  if (std::hypot(r.u, r.v) < 1e-12) return x;
  return std::nullopt;
}

/// Roots of a scalar function on (lo, hi] found by sign changes on a grid
/// that is dense near lo, then bisected to machine precision.
template <class G>
std::vector<double> scan_roots(G&& g, double lo, double hi, int cells) {
  std::vector<double> grid;
  // geometric cells inside the first uniform cell, uniform elsewhere
  for (int k = 40; k >= 1; --k) grid.push_back(lo + (hi - lo) / cells * std::pow(0.5, k));
  for (int i = 1; i <= cells; ++i) grid.push_back(lo + (hi - lo) * i / cells);
  std::vector<double> roots;
  double a = grid.front(), ga = g(a);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double b = grid[i], gb = g(b);
    if (ga == 0) {
      roots.push_back(a);
    } else if ((ga < 0) != (gb < 0) && gb != 0) {
      double l = a, r = b, gl = ga;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (l + r);
        if (mid <= l || mid >= r) break;
        const double gm = g(mid);
        if ((gm < 0) == (gl < 0)) {
          l = mid;
          gl = gm;
        } else {
          r = mid;
        }
      }
      roots.push_back(0.5 * (l + r));
    }
    a = b;
    ga = gb;
  }
  if (ga == 0) roots.push_back(a);
  return roots;
}

/// Classical fixed-step RK4 for a planar field.
inline Pt rk4(const Field& f, Pt x, double t_end, double dt) {
  const long n = static_cast<long>(std::ceil(t_end / dt));
  const double h = t_end / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const Pt k1 = f(x);
    const Pt k2 = f({x.u + 0.5 * h * k1.u, x.v + 0.5 * h * k1.v});
    const Pt k3 = f({x.u + 0.5 * h * k2.u, x.v + 0.5 * h * k2.v});
    const Pt k4 = f({x.u + h * k3.u, x.v + h * k3.v});
    x.u += h / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u);
    x.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
  }
  return x;
}

/// Divergence of (g F1, g F2) by central differences.
inline double fd_divergence(const Field& f, double (*g)(Pt), Pt x, double h = 1e-6) {
  auto gf1 = [&](Pt y) { return g(y) * f(y).u; };
  auto gf2 = [&](Pt y) { return g(y) * f(y).v; };
  return (gf1({x.u + h, x.v}) - gf1({x.u - h, x.v})) / (2 * h) +
         (gf2({x.u, x.v + h}) - gf2({x.u, x.v - h})) / (2 * h);
}

/// Equilibria of the nonlinear model with u > 0, found without the
/// closed forms: on v > 0 the second equation forces v = (s + delta u)/(s + delta),
/// on v = 0 the first reduces to a scalar equation. Each scalar root is
/// bisected and then polished by finite-difference Newton on the full field.
struct ScanResult {
  std::vector<Pt> positive;  ///< u > 0, v > 0
  std::vector<Pt> axis;      ///< u > 0, v = 0
};

inline ScanResult scan_equilibria(const Params& p, double box = 10.0, int cells = 4000) {
  ScanResult out;
  const Field f = [p](Pt x) { return f_nonlinear(p, x); };
  auto v_of = [&](double u) { return (p.s + p.delta * u) / (p.s + p.delta); };
  auto g_pos = [&](double u) {
    const double v = v_of(u);
    return u / (p.m + u) - p.e - p.h * u + p.delta * (v - u);
  };
  for (double u : scan_roots(g_pos, 0.0, box, cells)) {
    const double v = v_of(u);
    if (u > 0 && v > 0 && v <= box) {
      const auto pol = newton_fd(f, {u, v});
      out.positive.push_back(pol ? *pol : Pt{u, v});
    }
  }
  auto g_axis = [&](double u) { return u / (p.m + u) - p.e - (p.h + p.delta) * u; };
  for (double u : scan_roots(g_axis, 0.0, box, cells)) {
    if (u > 0) out.axis.push_back({u, 0.0});
  }
  return out;
}

/// Fixed-seed random parameter draws in the strict regime.
class ParamSampler {
 public:
  explicit ParamSampler(unsigned seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Params strict() {
    return {uniform(0.02, 3.0), uniform(0.005, 0.995), uniform(0.1, 3.0), uniform(0.005, 3.0),
            uniform(0.1, 3.0)};
  }

  /// e < B: the regime with a unique, globally attracting E1.
  Params below_B() {
    Params p = strict();
    const double B = p.s * p.delta / (p.s + p.delta);
    p.e = std::min(0.995, B) * uniform(0.02, 0.98);
    return p;
  }

  /// B < e < 1: the regime with a fold at m*.
  Params above_B() {
    for (;;) {
      Params p = strict();
      const double B = p.s * p.delta / (p.s + p.delta);
      if (B > 0.95) continue;
      p.e = B + (0.999 - B) * uniform(0.02, 0.98);
      return p;
    }
  }

  std::mt19937& engine() { return rng_; }

 private:
  std::mt19937 rng_;
};

}  // namespace oracle

#pragma once

// Trajectories, phase portraits and basin maps for the two-patch ODEs.

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "patchdyn/dopri5.hpp"
#include "patchdyn/equilibria.hpp"
#include "patchdyn/errors.hpp"
#include "patchdyn/model.hpp"
#include "patchdyn/parallel.hpp"

namespace patchdyn {

enum class ModelKind { Nonlinear, Linear };

enum class TerminalEvent { EndReached, Converged, StepFailure };

inline std::string_view to_string(ModelKind k) {
  return k == ModelKind::Nonlinear ? "nonlinear" : "linear";
}

inline std::string_view to_string(TerminalEvent e) {
  switch (e) {
    case TerminalEvent::EndReached: return "end-reached";
    case TerminalEvent::Converged: return "converged";
    case TerminalEvent::StepFailure: return "step-failure";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  ModelKind model = ModelKind::Nonlinear;
  TerminalEvent event = TerminalEvent::EndReached;

  [[nodiscard]] State final_state() const { return states.back(); }
  [[nodiscard]] double final_time() const { return times.back(); }
};

inline constexpr double kDefaultHorizon = 2000.0;
inline constexpr double kConvergedRhs = 1e-12;
inline constexpr double kConvergedDistance = 1e-8;

struct IntegrationOptions {
  double tol = 1e-8;
  bool record = true;              ///< keep every accepted step, else only the ends
  std::span<const State> targets;  ///< equilibria used for early termination
};

/// Integrates x' = rhs(x) from x0 over [0, t_end] with Dormand-Prince 5(4).
/// Stops early once the state is within 1e-8 of one of opt.targets and
/// |rhs| < max(1e-12, tol). Near a stable node the explicit stepper settles
/// at its stability limit, where |rhs| hovers around tol, so 1e-12 alone is
/// rarely reached.
template <class Rhs>
Trajectory integrate_system(Rhs&& rhs, State x0, double t_end, const IntegrationOptions& opt,
                            ModelKind tag = ModelKind::Nonlinear) {
  using Vec = std::array<double, 2>;
  StepperOptions so;
  so.rtol = so.atol = opt.tol;
  DormandPrince<Vec> stepper(so);
  Trajectory tr;
  tr.model = tag;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);

  auto f = [&](double, const Vec& y, Vec& dy) {
    const State d = rhs(State{y[0], y[1]});
    dy[0] = d.u;
    dy[1] = d.v;
  };
  bool converged = false;
  auto observer = [&](double t, const Vec& y) {
    const State x{y[0], y[1]};
    if (opt.record) {
      tr.times.push_back(t);
      tr.states.push_back(x);
    }
    if (!opt.targets.empty()) {
      const State d = rhs(x);
      if (std::hypot(d.u, d.v) < std::max(kConvergedRhs, opt.tol)) {
        for (const State& e : opt.targets) {
          if (std::hypot(x.u - e.u, x.v - e.v) <= kConvergedDistance) {
            converged = true;
            return false;
          }
        }
      }
    }
    return true;
  };

  Vec y{x0.u, x0.v};
  double t = 0;
  const StepStatus status = stepper.advance(
      f, t, y, t_end, [](const Vec&) { return std::numeric_limits<double>::infinity(); },
      observer);
  if (!opt.record && t > 0) {
    tr.times.push_back(t);
    tr.states.push_back({y[0], y[1]});
  }
  if (status == StepStatus::StepFailure) {
    tr.event = TerminalEvent::StepFailure;
  } else if (converged) {
    tr.event = TerminalEvent::Converged;
  }
  return tr;
}

/// Equilibrium coordinates of the chosen model, for convergence detection.
inline std::vector<Equilibrium> model_equilibria(ModelKind model, const OdeParams& p) {
  if (model == ModelKind::Nonlinear) return all_equilibria(p);
  return linear_equilibria(p).equilibria;
}

inline State model_rhs(ModelKind model, const OdeParams& p, State x) {
  return model == ModelKind::Nonlinear ? rhs_nonlinear(p, x) : rhs_linear(p, x);
}

inline Trajectory integrate_ode(ModelKind model, const OdeParams& p, State x0, double t_end,
                                double tol, bool record = true) {
  validate(p, model == ModelKind::Nonlinear ? Validation::Strict : Validation::Relaxed);
  if (!(x0.u >= 0) || !(x0.v >= 0) || !std::isfinite(x0.u) || !std::isfinite(x0.v)) {
    throw DomainError("initial state must be componentwise nonnegative");
  }
  if (!(tol >= 1e-12 && tol <= 1e-3)) throw DomainError("tolerance must lie in [1e-12, 1e-3]");
  if (!(t_end > 0) || !std::isfinite(t_end)) throw DomainError("t_end must be positive");

  std::vector<State> targets;
  for (const auto& eq : model_equilibria(model, p)) targets.push_back(eq.state());
  IntegrationOptions opt;
  opt.tol = tol;
  opt.record = record;
  opt.targets = targets;
  return integrate_system([&](State x) { return model_rhs(model, p, x); }, x0, t_end, opt, model);
}

// ---------------------------------------------------------------------------
// Grids

struct GridSpec {
  double u_min = 0;
  double u_max = 1;
  double v_min = 0;
  double v_max = 1;
  int nu = 2;
  int nv = 2;
};

inline void validate(const GridSpec& g) {
  if (!(g.u_max > g.u_min) || !(g.v_max > g.v_min)) {
    throw ValidationError("grid extents must be positive");
  }
  if (g.u_min < 0 || g.v_min < 0) throw ValidationError("grid must lie in the closed first quadrant");
  if (g.nu < 2 || g.nv < 2) throw ValidationError("grid needs at least 2 nodes per axis");
}

/// Nodes in row-major order: v outer, u inner.
inline std::vector<State> grid_nodes(const GridSpec& g) {
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(g.nu) * g.nv);
  for (int j = 0; j < g.nv; ++j) {
    const double v = g.v_min + (g.v_max - g.v_min) * j / (g.nv - 1);
    for (int i = 0; i < g.nu; ++i) {
      out.push_back({g.u_min + (g.u_max - g.u_min) * i / (g.nu - 1), v});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase portraits

struct PortraitData {
  std::vector<State> nodes;
  std::vector<State> field;  ///< rhs at each node
  std::vector<State> seeds;
  std::vector<Trajectory> trajectories;
  std::vector<Equilibrium> equilibria;
};

struct PortraitOptions {
  ModelKind model = ModelKind::Nonlinear;
  double t_end = kDefaultHorizon;
  double tol = 1e-8;
};

inline bool is_unstable(const StabilityLabel& l) {
  switch (l.type) {
    case Stability::Saddle:
    case Stability::UnstableNode:
    case Stability::UnstableFocus:
    case Stability::RepellingSaddleNode: return true;
    default: return false;
  }
}

/// Sixteen points evenly spaced along the perimeter of the grid box, plus
/// four axis-aligned offsets around each unstable equilibrium inside it.
inline std::vector<State> portrait_seeds(const GridSpec& g, const std::vector<Equilibrium>& eqs) {
  std::vector<State> seeds;
  const double w = g.u_max - g.u_min, h = g.v_max - g.v_min;
  const double perimeter = 2 * (w + h);
  for (int k = 0; k < 16; ++k) {
    double s = perimeter * k / 16;
    if (s < w) {
      seeds.push_back({g.u_min + s, g.v_min});
    } else if ((s -= w) < h) {
      seeds.push_back({g.u_max, g.v_min + s});
    } else if ((s -= h) < w) {
      seeds.push_back({g.u_max - s, g.v_max});
    } else {
      s -= w;
      seeds.push_back({g.u_min, g.v_max - s});
    }
  }
  const double eps = 0.01 * std::max(w, h);
  for (const auto& eq : eqs) {
    if (!is_unstable(eq.stability)) continue;
    if (eq.u < g.u_min || eq.u > g.u_max || eq.v < g.v_min || eq.v > g.v_max) continue;
    const State offsets[] = {{eps, 0}, {-eps, 0}, {0, eps}, {0, -eps}};
    for (const State& o : offsets) {
      const State x{eq.u + o.u, eq.v + o.v};
      if (x.u >= 0 && x.v >= 0) seeds.push_back(x);
    }
  }
  return seeds;
}

inline PortraitData phase_portrait(const OdeParams& p, const GridSpec& g,
                                   const PortraitOptions& opt = {}) {
  validate(g);
  validate(p, opt.model == ModelKind::Nonlinear ? Validation::Strict : Validation::Relaxed);
  PortraitData out;
  out.nodes = grid_nodes(g);
  out.field.reserve(out.nodes.size());
  for (const State& x : out.nodes) out.field.push_back(model_rhs(opt.model, p, x));
  out.equilibria = model_equilibria(opt.model, p);
  out.seeds = portrait_seeds(g, out.equilibria);
  out.trajectories.resize(out.seeds.size());
  parallel_for(out.seeds.size(), [&](std::size_t i) {
    out.trajectories[i] = integrate_ode(opt.model, p, out.seeds[i], opt.t_end, opt.tol);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Basins

inline constexpr std::string_view kUnresolved = "Unresolved";

struct BasinMap {
  GridSpec grid;
  std::vector<State> nodes;
  std::vector<std::string> labels;
};

struct BasinOptions {
  double horizon = kDefaultHorizon;
  double integration_tol = 1e-8;
};

/// Name of the equilibrium within `tol` of x, or "Unresolved".
inline std::string nearest_label(const std::vector<Equilibrium>& eqs, State x, double tol) {
  double best = std::numeric_limits<double>::infinity();
  std::string label(kUnresolved);
  for (const auto& eq : eqs) {
    const double d = std::hypot(x.u - eq.u, x.v - eq.v);
    if (d <= tol && d < best) {
      best = d;
      label = std::string(to_string(eq.kind));
    }
  }
  return label;
}

/// Labels each grid node by the equilibrium its trajectory reaches within
/// `tol` by the horizon. Defined for the bistable and globally stable regimes.
inline BasinMap basin_map(const OdeParams& p, const GridSpec& g, double tol,
                          const BasinOptions& opt = {}) {
  validate(g);
  const RegimeReport regime = regime_report(p);
  if (regime.verdict != GlobalVerdict::Bistable && regime.verdict != GlobalVerdict::EvGAS &&
      regime.verdict != GlobalVerdict::E1GAS) {
    throw PreconditionError("basin map needs a bistable or globally stable regime");
  }
  if (!(tol > 0)) throw ValidationError("basin tolerance must be positive");
  BasinMap out;
  out.grid = g;
  out.nodes = grid_nodes(g);
  out.labels.resize(out.nodes.size());
  parallel_for(out.nodes.size(), [&](std::size_t i) {
    const Trajectory tr =
        integrate_ode(ModelKind::Nonlinear, p, out.nodes[i], opt.horizon, opt.integration_tol, false);
    out.labels[i] = tr.event == TerminalEvent::StepFailure
                        ? std::string(kUnresolved)
                        : nearest_label(regime.equilibria, tr.final_state(), tol);
  });
  return out;
}

}  // namespace patchdyn

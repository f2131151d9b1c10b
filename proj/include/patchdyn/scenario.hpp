#pragma once

// Scenarios (one runnable parameter set plus command options), their JSON
// form, and the bundled figure presets. Needs nlohmann/json on the include
// path.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "patchdyn/csv.hpp"
#include "patchdyn/errors.hpp"
#include "patchdyn/model.hpp"
#include "patchdyn/ode_sim.hpp"
#include "patchdyn/pde.hpp"

namespace patchdyn {

enum class ScenarioModel { NonlinearOde, LinearOde, LinearPde, NonlinearPde };

inline std::string_view to_string(ScenarioModel m) {
  switch (m) {
    case ScenarioModel::NonlinearOde: return "nonlinear-ode";
    case ScenarioModel::LinearOde: return "linear-ode";
    case ScenarioModel::LinearPde: return "linear-pde";
    case ScenarioModel::NonlinearPde: return "nonlinear-pde";
  }
  return "?";
}

inline ScenarioModel parse_scenario_model(std::string_view s) {
  for (auto m : {ScenarioModel::NonlinearOde, ScenarioModel::LinearOde, ScenarioModel::LinearPde,
                 ScenarioModel::NonlinearPde}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown model kind '" + std::string(s) + "'");
}

inline bool is_pde(ScenarioModel m) {
  return m == ScenarioModel::LinearPde || m == ScenarioModel::NonlinearPde;
}

struct Scenario {
  std::string command;  ///< default subcommand for this scenario
  ScenarioModel model = ScenarioModel::NonlinearOde;
  OdeParams ode{1, 0.1, 0.9, 0.1, 0.9};
  PdeConfig pde{};

  // sweep
  double m_min = 0.05;
  double m_max = 1.0;
  int steps = 200;
  bool include_boundary = false;
  // trajectories
  State x0{0.5, 0.5};
  double t_end = kDefaultHorizon;
  double tol = 1e-8;
  // basin / portrait
  GridSpec grid{0, 1.2, 0, 1.2, 13, 13};
  double basin_tol = 1e-4;

  std::string format = "csv";
  std::string out;
};

inline Validation validation_mode(const Scenario& s) {
  return s.model == ScenarioModel::NonlinearOde ? Validation::Strict : Validation::Relaxed;
}

inline void validate(const Scenario& s) {
  if (s.format != "csv" && s.format != "json") throw ValidationError("format must be csv or json");
  if (is_pde(s.model)) {
    PdeConfig c = s.pde;
    c.kind = s.model == ScenarioModel::LinearPde ? DispersalKind::Linear : DispersalKind::Nonlinear;
    validate(c);
  } else {
    validate(s.ode, validation_mode(s));
    validate(s.grid);
  }
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

namespace detail {

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("bad value for '") + key + "': " + ex.what());
  }
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ValidationError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace detail

inline json to_json(const OdeParams& p) {
  return {{"m", p.m}, {"e", p.e}, {"h", p.h}, {"delta", p.delta}, {"s", p.s}};
}

inline OdeParams ode_params_from_json(const json& j, OdeParams p = {}) {
  detail::check_keys(j, {"m", "e", "h", "delta", "s"}, "params");
  detail::read(j, "m", p.m);
  detail::read(j, "e", p.e);
  detail::read(j, "h", p.h);
  detail::read(j, "delta", p.delta);
  detail::read(j, "s", p.s);
  return p;
}

inline json to_json(const PiecewiseConstant& c) { return {{"left", c.left}, {"right", c.right}}; }

inline json to_json(const CoefficientProfile& c) {
  return {{"m", to_json(c.m)},   {"m1", to_json(c.m1)}, {"e", to_json(c.e)},
          {"e1", to_json(c.e1)}, {"h", to_json(c.h)},   {"h1", to_json(c.h1)},
          {"s", to_json(c.s)},   {"s1", to_json(c.s1)}, {"patch_structure", c.patch_structure}};
}

inline json to_json(const FieldInit& f) {
  json bumps = json::array();
  for (const auto& b : f.bumps) {
    bumps.push_back({{"center", b.center}, {"width", b.width}, {"amplitude", b.amplitude}});
  }
  json j{{"base", f.base}, {"quadratic", f.quadratic}, {"bumps", bumps}};
  if (!f.samples.empty()) j["samples"] = f.samples;
  return j;
}

inline json to_json(const PdeConfig& c) {
  return {{"L", c.L},
          {"L1", c.L1},
          {"N", c.N},
          {"delta1", c.delta1},
          {"delta2", c.delta2},
          {"kind", std::string(to_string(c.kind))},
          {"form", std::string(to_string(c.form))},
          {"profile", to_json(c.profile)},
          {"u0", to_json(c.u0)},
          {"v0", to_json(c.v0)},
          {"t_end", c.t_end},
          {"tol", c.tol},
          {"snapshots", c.snapshots},
          {"dt_floor", c.dt_floor}};
}

inline PiecewiseConstant piecewise_from_json(const json& j, PiecewiseConstant c) {
  if (j.is_number()) return {j.get<double>(), j.get<double>()};
  detail::check_keys(j, {"left", "right"}, "coefficient");
  detail::read(j, "left", c.left);
  detail::read(j, "right", c.right);
  return c;
}

inline CoefficientProfile profile_from_json(const json& j, CoefficientProfile c) {
  detail::check_keys(j, {"m", "m1", "e", "e1", "h", "h1", "s", "s1", "patch_structure"},
                     "profile");
  const std::pair<const char*, PiecewiseConstant*> fields[] = {
      {"m", &c.m}, {"m1", &c.m1}, {"e", &c.e}, {"e1", &c.e1},
      {"h", &c.h}, {"h1", &c.h1}, {"s", &c.s}, {"s1", &c.s1}};
  for (auto [key, dst] : fields) {
    if (j.contains(key)) *dst = piecewise_from_json(j.at(key), *dst);
  }
  detail::read(j, "patch_structure", c.patch_structure);
  return c;
}

inline FieldInit field_from_json(const json& j, FieldInit f) {
  if (j.is_number()) return FieldInit::flat(j.get<double>());
  detail::check_keys(j, {"base", "quadratic", "bumps", "samples"}, "initial data");
  detail::read(j, "base", f.base);
  detail::read(j, "quadratic", f.quadratic);
  if (j.contains("bumps")) {
    f.bumps.clear();
    for (const auto& b : j.at("bumps")) {
      detail::check_keys(b, {"center", "width", "amplitude"}, "bump");
      FieldInit::Bump bump;
      detail::read(b, "center", bump.center);
      detail::read(b, "width", bump.width);
      detail::read(b, "amplitude", bump.amplitude);
      f.bumps.push_back(bump);
    }
  }
  detail::read(j, "samples", f.samples);
  return f;
}

inline PdeConfig pde_config_from_json(const json& j, PdeConfig c = {}) {
  detail::check_keys(j,
                     {"L", "L1", "N", "delta1", "delta2", "kind", "form", "profile", "u0", "v0",
                      "t_end", "tol", "snapshots", "dt_floor"},
                     "pde");
  detail::read(j, "L", c.L);
  detail::read(j, "L1", c.L1);
  detail::read(j, "N", c.N);
  detail::read(j, "delta1", c.delta1);
  detail::read(j, "delta2", c.delta2);
  if (j.contains("kind")) {
    const auto k = j.at("kind").get<std::string>();
    if (k != "linear" && k != "nonlinear") throw ValidationError("pde kind must be linear or nonlinear");
    c.kind = k == "linear" ? DispersalKind::Linear : DispersalKind::Nonlinear;
  }
  if (j.contains("form")) {
    const auto f = j.at("form").get<std::string>();
    if (f != "pointwise" && f != "divergence") {
      throw ValidationError("pde form must be pointwise or divergence");
    }
    c.form = f == "pointwise" ? NonlinearForm::Pointwise : NonlinearForm::Divergence;
  }
  if (j.contains("profile")) c.profile = profile_from_json(j.at("profile"), c.profile);
  if (j.contains("u0")) c.u0 = field_from_json(j.at("u0"), c.u0);
  if (j.contains("v0")) c.v0 = field_from_json(j.at("v0"), c.v0);
  detail::read(j, "t_end", c.t_end);
  detail::read(j, "tol", c.tol);
  detail::read(j, "snapshots", c.snapshots);
  detail::read(j, "dt_floor", c.dt_floor);
  return c;
}

inline json to_json(const GridSpec& g) {
  return {{"u_min", g.u_min}, {"u_max", g.u_max}, {"v_min", g.v_min},
          {"v_max", g.v_max}, {"nu", g.nu},       {"nv", g.nv}};
}

inline GridSpec grid_from_json(const json& j, GridSpec g) {
  detail::check_keys(j, {"u_min", "u_max", "v_min", "v_max", "nu", "nv"}, "grid");
  detail::read(j, "u_min", g.u_min);
  detail::read(j, "u_max", g.u_max);
  detail::read(j, "v_min", g.v_min);
  detail::read(j, "v_max", g.v_max);
  detail::read(j, "nu", g.nu);
  detail::read(j, "nv", g.nv);
  return g;
}

/// Complete echo: feeding it back through scenario_from_json reproduces s.
inline json to_json(const Scenario& s) {
  json j{{"command", s.command}, {"model", std::string(to_string(s.model))}};
  if (is_pde(s.model)) {
    j["pde"] = to_json(s.pde);
  } else {
    j["params"] = to_json(s.ode);
    j["sweep"] = {{"m_min", s.m_min},
                  {"m_max", s.m_max},
                  {"steps", s.steps},
                  {"include_boundary", s.include_boundary}};
    j["x0"] = {s.x0.u, s.x0.v};
    j["t_end"] = s.t_end;
    j["tol"] = s.tol;
    j["grid"] = to_json(s.grid);
    j["basin_tol"] = s.basin_tol;
  }
  j["format"] = s.format;
  j["out"] = s.out;
  return j;
}

inline Scenario scenario_from_json(const json& j, Scenario s = {}) {
  detail::check_keys(j,
                     {"command", "model", "params", "pde", "sweep", "x0", "t_end", "tol", "grid",
                      "basin_tol", "format", "out"},
                     "scenario");
  detail::read(j, "command", s.command);
  if (j.contains("model")) s.model = parse_scenario_model(j.at("model").get<std::string>());
  if (j.contains("params")) s.ode = ode_params_from_json(j.at("params"), s.ode);
  if (j.contains("pde")) s.pde = pde_config_from_json(j.at("pde"), s.pde);
  if (j.contains("sweep")) {
    const json& w = j.at("sweep");
    detail::check_keys(w, {"m_min", "m_max", "steps", "include_boundary"}, "sweep");
    detail::read(w, "m_min", s.m_min);
    detail::read(w, "m_max", s.m_max);
    detail::read(w, "steps", s.steps);
    detail::read(w, "include_boundary", s.include_boundary);
  }
  if (j.contains("x0")) {
    const json& x = j.at("x0");
    if (!x.is_array() || x.size() != 2) throw ValidationError("x0 must be [u, v]");
    s.x0 = {x[0].get<double>(), x[1].get<double>()};
  }
  detail::read(j, "t_end", s.t_end);
  detail::read(j, "tol", s.tol);
  if (j.contains("grid")) s.grid = grid_from_json(j.at("grid"), s.grid);
  detail::read(j, "basin_tol", s.basin_tol);
  detail::read(j, "format", s.format);
  detail::read(j, "out", s.out);
  if (is_pde(s.model)) {
    s.pde.kind = s.model == ScenarioModel::LinearPde ? DispersalKind::Linear : DispersalKind::Nonlinear;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Presets

struct PresetVariant {
  std::string label;  ///< file suffix; empty for single-variant presets
  Scenario scenario;
};

struct Preset {
  std::string name;
  std::string description;
  std::vector<PresetVariant> variants;
};

namespace detail {

inline Scenario ode_scenario(std::string command, OdeParams p,
                             ScenarioModel model = ScenarioModel::NonlinearOde) {
  Scenario s;
  s.command = std::move(command);
  s.model = model;
  s.ode = p;
  return s;
}

inline std::string label_of(const char* name, double value) {
  return std::string(name) + "=" + format_number(value);
}

inline FieldInit twin_gaussians(double base, double c1, double c2, double a2) {
  const double w = std::sqrt(0.008);
  return FieldInit{base, 0, {{c1, w, 1.0}, {c2, w, a2}}, {}};
}

inline Scenario pde_scenario(ScenarioModel model, double d1, double d2, FieldInit u0, FieldInit v0) {
  Scenario s;
  s.command = "simulate-pde";
  s.model = model;
  s.pde.kind = model == ScenarioModel::LinearPde ? DispersalKind::Linear : DispersalKind::Nonlinear;
  s.pde.delta1 = d1;
  s.pde.delta2 = d2;
  s.pde.u0 = std::move(u0);
  s.pde.v0 = std::move(v0);
  return s;
}

}  // namespace detail

inline std::vector<Preset> make_presets() {
  using detail::ode_scenario;
  std::vector<Preset> out;
  const double h = 0.9, s = 0.9;

  // Phase-portrait atlas, one parameter set per regime case.
  const double m0_e01 = std::pow(1 - std::sqrt(0.1), 2) / (h + 0.1);
  const std::pair<const char*, OdeParams> atlas[] = {
      {"fig1a", {2.0, 0.05, h, 0.1, s}},   {"fig1b", {1.5, 0.09, h, 0.1, s}},
      {"fig1c", {1 / 0.99, 0.09, h, 0.1, s}}, {"fig1d", {0.5, 0.09, h, 0.1, s}},
      {"fig1e", {0.4, 0.1, h, 0.1, s}},    {"fig1f", {m0_e01, 0.1, h, 0.1, s}},
      {"fig1g", {0.5, 0.1, h, 0.1, s}},    {"fig1h", {9.0 / 11.0, 0.1, h, 0.1, s}},
      {"fig1i", {0.9, 0.1, h, 0.1, s}}};
  for (const auto& [name, p] : atlas) {
    out.push_back({name, std::string("phase portrait, regime case ") + (name + 4),
                   {{"", ode_scenario("portrait", p)}}});
  }

  {
    Scenario sw = ode_scenario("sweep", {0.5, 0.1, h, 0.1, s});
    sw.m_min = 0.05;
    sw.m_max = 1.0;
    sw.steps = 200;
    out.push_back({"fig2", "saddle-node diagram in m, e = delta = 0.1, s = h = 0.9", {{"", sw}}});
  }
  {
    Preset p{"fig3", "u(t) for several delta, m = 0.7, e = 0.04, h = s = 0.9", {}};
    for (double d : {0.001, 0.02, 0.05, 0.2}) {
      Scenario sc = ode_scenario("simulate-ode", {0.7, 0.04, h, d, s});
      sc.t_end = 500;
      p.variants.push_back({detail::label_of("delta", d), sc});
    }
    out.push_back(p);
  }
  {
    Preset p{"fig4", "u(t) for several m, delta = 0.1, e = 0.04, h = s = 0.9", {}};
    for (double m : {0.5, 1.0, 2.0, 5.0}) {
      Scenario sc = ode_scenario("simulate-ode", {m, 0.04, h, 0.1, s});
      sc.t_end = 500;
      p.variants.push_back({detail::label_of("m", m), sc});
    }
    out.push_back(p);
  }
  {
    Preset p{"fig5", "linear dispersal, u(t) and v(t) for several delta, m = e = 2, h = s = 1", {}};
    for (double d : {2.5, 3.0, 4.0}) {
      Scenario sc = ode_scenario("simulate-ode", {2, 2, 1, d, 1}, ScenarioModel::LinearOde);
      sc.t_end = 100;
      p.variants.push_back({detail::label_of("delta", d), sc});
    }
    out.push_back(p);
  }

  const FieldInit quad_u{3, 1, {}, {}}, quad_v{2, 1, {}, {}};
  auto pde_preset = [&](const char* name, const char* what, Scenario sc) {
    out.push_back({name, what, {{"", std::move(sc)}}});
  };
  using detail::pde_scenario;
  using detail::twin_gaussians;
  pde_preset("fig-lin-quadratic", "linear dispersal 0.4/0.004, data (3+x^2, 2+x^2)",
             pde_scenario(ScenarioModel::LinearPde, 0.4, 0.004, quad_u, quad_v));
  pde_preset("fig-lin-gauss-1.8", "linear dispersal 0.4/0.004, Gaussians at 1.8 and 0.4",
             pde_scenario(ScenarioModel::LinearPde, 0.4, 0.004, twin_gaussians(0, 1.8, 0.4, 1),
                          twin_gaussians(0, 1.8, 0.4, 1)));
  pde_preset("fig-lin-gauss-1.9", "linear dispersal 0.4/0.004, Gaussians at 1.9 and 0.4",
             pde_scenario(ScenarioModel::LinearPde, 0.4, 0.004, twin_gaussians(0, 1.9, 0.4, 1),
                          twin_gaussians(0, 1.9, 0.4, 1)));
  pde_preset("fig-lin-gauss-0.65", "linear dispersal 0.4/0.004, Gaussians at 1.9 and 0.65*0.4",
             pde_scenario(ScenarioModel::LinearPde, 0.4, 0.004, twin_gaussians(0, 1.9, 0.4, 0.65),
                          twin_gaussians(0, 1.9, 0.4, 0.65)));
  pde_preset("fig-nonlin-flat", "nonlinear dispersal 2/3, flat data (5, 5)",
             pde_scenario(ScenarioModel::NonlinearPde, 2, 3, FieldInit::flat(5), FieldInit::flat(5)));
  {
    Scenario sc =
        pde_scenario(ScenarioModel::NonlinearPde, 2, 3, FieldInit::flat(5), FieldInit::flat(5));
    sc.pde.L1 = sc.pde.L / 3;
    pde_preset("fig-nonlin-flat-third", "nonlinear dispersal 2/3, flat data, Allee patch L/3", sc);
  }
  pde_preset("fig-nonlin-gauss", "nonlinear dispersal 2/3, 0.0001 + Gaussians at 1.9 and 0.4",
             pde_scenario(ScenarioModel::NonlinearPde, 2, 3, twin_gaussians(1e-4, 1.9, 0.4, 1),
                          twin_gaussians(1e-4, 1.9, 0.4, 1)));
  {
    // Strong Allee patch with fast linear mixing: the logistic patch cannot
    // rescue the population (negative principal eigenvalue).
    Scenario sc = pde_scenario(ScenarioModel::LinearPde, 4, 4, quad_u, quad_v);
    sc.pde.profile = CoefficientProfile::patchy({2, 3, 1, 1}, 1);
    pde_preset("fig-lin-extinct", "linear dispersal 4/4, Allee patch m=2 e=3 h=s=1: extinction", sc);
  }
  return out;
}

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = make_presets();
  return all;
}

inline const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

}  // namespace patchdyn

#pragma once

// Command-line front end. run() is kept in a header so tests can drive it
// in-process with captured streams.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "patchdyn/patchdyn.hpp"

namespace patchdyn::cli {

inline constexpr const char* kToolName = "patchdyn";
inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3, kUsage = 64 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using nlohmann::json;

/// Everything that can come from flags. Unset optionals leave the scenario alone.
struct Flags {
  std::optional<std::string> preset, scenario, format, out, model, kind, form;
  std::optional<double> m, e, h, delta, s;
  std::optional<double> t_end, tol, u0, v0;
  std::optional<double> m_min, m_max;
  std::optional<int> steps;
  bool include_boundary = false;
  std::optional<double> u_min, u_max, v_min, v_max, basin_tol;
  std::optional<int> nu, nv;
  std::optional<double> delta1, delta2, L, L1;
  std::optional<int> N, snapshots;
};

namespace detail {

inline bool has_explicit_params(const Flags& f) {
  return f.m || f.e || f.h || f.delta || f.s || f.delta1 || f.delta2 || f.model || f.kind;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw ValidationError("scenario file '" + path + "' is not valid JSON: " + ex.what());
  }
}

/// Scenario variants from a scenario document, or from a manifest that
/// echoes one ("scenario") or several ("variants").
inline std::vector<PresetVariant> variants_from_document(const json& doc) {
  std::vector<PresetVariant> out;
  if (doc.contains("variants")) {
    for (const auto& v : doc.at("variants")) {
      out.push_back({v.value("label", std::string()), scenario_from_json(v.at("scenario"))});
    }
  } else if (doc.contains("scenario")) {
    out.push_back({"", scenario_from_json(doc.at("scenario"))});
  } else {
    out.push_back({"", scenario_from_json(doc)});
  }
  if (out.empty()) throw ValidationError("scenario document holds no scenario");
  return out;
}

inline bool command_is_pde(const std::string& command) { return command == "simulate-pde"; }

inline void apply_overrides(Scenario& s, const Flags& f) {
  if (f.format) s.format = *f.format;
  if (f.out) s.out = *f.out;
  if (is_pde(s.model)) {
    if (f.t_end) s.pde.t_end = *f.t_end;
    if (f.tol) s.pde.tol = *f.tol;
    if (f.delta1) s.pde.delta1 = *f.delta1;
    if (f.delta2) s.pde.delta2 = *f.delta2;
    if (f.L) s.pde.L = *f.L;
    if (f.L1) s.pde.L1 = *f.L1;
    if (f.N) s.pde.N = *f.N;
    if (f.snapshots) s.pde.snapshots = *f.snapshots;
    if (f.form) {
      if (*f.form != "pointwise" && *f.form != "divergence") {
        throw ValidationError("--form must be pointwise or divergence");
      }
      s.pde.form = *f.form == "pointwise" ? NonlinearForm::Pointwise : NonlinearForm::Divergence;
    }
    return;
  }
  if (f.m) s.ode.m = *f.m;
  if (f.e) s.ode.e = *f.e;
  if (f.h) s.ode.h = *f.h;
  if (f.delta) s.ode.delta = *f.delta;
  if (f.s) s.ode.s = *f.s;
  if (f.t_end) s.t_end = *f.t_end;
  if (f.tol) s.tol = *f.tol;
  if (f.u0) s.x0.u = *f.u0;
  if (f.v0) s.x0.v = *f.v0;
  if (f.m_min) s.m_min = *f.m_min;
  if (f.m_max) s.m_max = *f.m_max;
  if (f.steps) s.steps = *f.steps;
  if (f.include_boundary) s.include_boundary = true;
  if (f.u_min) s.grid.u_min = *f.u_min;
  if (f.u_max) s.grid.u_max = *f.u_max;
  if (f.v_min) s.grid.v_min = *f.v_min;
  if (f.v_max) s.grid.v_max = *f.v_max;
  if (f.nu) s.grid.nu = *f.nu;
  if (f.nv) s.grid.nv = *f.nv;
  if (f.basin_tol) s.basin_tol = *f.basin_tol;
}

inline std::vector<PresetVariant> resolve(const std::string& command, const Flags& f) {
  if (f.preset && f.scenario) throw ValidationError("--preset and --scenario are mutually exclusive");
  if ((f.preset || f.scenario) && has_explicit_params(f)) {
    throw ValidationError("explicit model parameters conflict with --preset/--scenario");
  }
  std::vector<PresetVariant> variants;
  if (f.preset) {
    const Preset* p = find_preset(*f.preset);
    if (!p) throw UsageError("unknown preset '" + *f.preset + "' (see `presets list`)");
    variants = p->variants;
  } else if (f.scenario) {
    variants = variants_from_document(read_json_file(*f.scenario));
  } else {
    Scenario s;
    s.command = command;
    if (command_is_pde(command)) {
      const std::string kind = f.kind.value_or("linear");
      if (kind != "linear" && kind != "nonlinear") throw ValidationError("--kind must be linear or nonlinear");
      s.model = kind == "linear" ? ScenarioModel::LinearPde : ScenarioModel::NonlinearPde;
      s.pde.kind = kind == "linear" ? DispersalKind::Linear : DispersalKind::Nonlinear;
    } else {
      const std::string model = f.model.value_or("nonlinear");
      if (model != "nonlinear" && model != "linear") {
        throw ValidationError("--model must be nonlinear or linear");
      }
      s.model = model == "nonlinear" ? ScenarioModel::NonlinearOde : ScenarioModel::LinearOde;
      if (!(f.m && f.e && f.h && f.delta && f.s)) {
        throw UsageError("parameters --m --e --h --delta --s are required without --preset/--scenario");
      }
    }
    variants.push_back({"", s});
  }
  for (auto& v : variants) {
    apply_overrides(v.scenario, f);
    v.scenario.command = command;
    validate(v.scenario);
  }
  return variants;
}

// ---------------------------------------------------------------------------
// Output files

class Outputs {
 public:
  Outputs(std::string target, std::string format) : target_(std::move(target)), format_(std::move(format)) {}

  [[nodiscard]] bool enabled() const { return !target_.empty(); }
  [[nodiscard]] const std::vector<std::string>& written() const { return written_; }
  [[nodiscard]] const std::string& format() const { return format_; }

  /// Writes `content` to the file for (command, variant label, part).
  void write(const std::string& command, const std::string& label, const std::string& part,
             const std::string& content) {
    if (!enabled()) return;
    namespace fs = std::filesystem;
    const std::string ext = format_ == "json" ? ".json" : ".csv";
    std::string suffix;
    if (!label.empty()) suffix += "-" + label;
    if (!part.empty()) suffix += "-" + part;
    fs::path path;
    const bool dir_mode = target_.back() == '/' || fs::is_directory(target_);
    if (dir_mode) {
      fs::create_directories(target_);
      path = fs::path(target_) / (command + suffix + ext);
    } else {
      fs::path t(target_);
      const std::string e = t.has_extension() ? t.extension().string() : ext;
      path = t.parent_path() / (t.stem().string() + suffix + e);
      if (!t.parent_path().empty()) fs::create_directories(t.parent_path());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot write output file '" + path.string() + "'");
    os << content;
    if (!os) throw NumericError("failed writing '" + path.string() + "'");
    written_.push_back(path.generic_string());
  }

 private:
  std::string target_;
  std::string format_;
  std::vector<std::string> written_;
};

inline json num(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);  // JSON has no NaN/inf
}

inline json equilibrium_json(const Equilibrium& eq) {
  json ev = json::array();
  for (const auto& l : eq.eigenvalues) ev.push_back({num(l.real()), num(l.imag())});
  return {{"name", std::string(to_string(eq.kind))},
          {"u", num(eq.u)},
          {"v", num(eq.v)},
          {"stability", std::string(to_string(eq.stability.type))},
          {"sector", std::string(to_string(eq.stability.sector))},
          {"description", describe(eq.stability)},
          {"eigenvalues", ev}};
}

inline std::string equilibria_csv(const std::vector<Equilibrium>& eqs) {
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"name", "u", "v", "stability", "sector", "lambda1_re", "lambda1_im", "lambda2_re",
            "lambda2_im"});
  for (const auto& eq : eqs) {
    w.field(to_string(eq.kind)).field(eq.u).field(eq.v).field(to_string(eq.stability.type));
    w.field(to_string(eq.stability.sector));
    for (const auto& l : eq.eigenvalues) w.field(l.real()).field(l.imag());
    w.end_row();
  }
  return os.str();
}

inline json thresholds_json(const DerivedQuantities& d) {
  auto opt = [](const std::optional<double>& x) { return x ? num(*x) : json(nullptr); };
  return {{"B", num(d.B)},
          {"m0", num(d.m0)},
          {"m1", num(d.m1)},
          {"mstar", opt(d.mstar)},
          {"m1star", opt(d.m1star)}};
}

inline ModelKind ode_kind(const Scenario& s) {
  return s.model == ScenarioModel::LinearOde ? ModelKind::Linear : ModelKind::Nonlinear;
}

inline void require_ode(const Scenario& s, const std::string& command) {
  if (is_pde(s.model)) throw ValidationError(command + " needs an ODE scenario");
}

inline void require_nonlinear(const Scenario& s, const std::string& command) {
  if (s.model != ScenarioModel::NonlinearOde) {
    throw ValidationError(command + " is defined for the nonlinear-dispersal ODE only");
  }
}

inline json derived_json(const Scenario& s) {
  switch (s.model) {
    case ScenarioModel::NonlinearOde: return thresholds_json(derived_thresholds(s.ode));
    case ScenarioModel::LinearOde: return {{"u_bound", num(linear_u_bound(s.ode))}};
    default: {
      const DiscretizedProblem p = build_pde_problem(s.pde);
      return {{"dx", p.dx}, {"L1", p.L1}, {"patch_edge", p.patch_edge},
              {"C1", s.pde.profile.lower_bound()}};
    }
  }
}

// ---------------------------------------------------------------------------
// Commands. Each writes its files and returns the manifest result block.

inline json cmd_equilibria(const Scenario& s, const std::string& label, Outputs& out) {
  require_ode(s, "equilibria");
  std::vector<Equilibrium> eqs;
  json result;
  if (s.model == ScenarioModel::LinearOde) {
    const LinearEquilibria le = linear_equilibria(s.ode);
    eqs = le.equilibria;
    result["verdict"] = std::string(to_string(le.verdict));
    result["diagnostics"] = le.diagnostics;
  } else {
    eqs = all_equilibria(s.ode);
  }
  result["equilibria"] = json::array();
  for (const auto& eq : eqs) result["equilibria"].push_back(equilibrium_json(eq));
  out.write("equilibria", label, "",
            out.format() == "json" ? result["equilibria"].dump(2) + "\n" : equilibria_csv(eqs));
  return result;
}

inline json cmd_regime(const Scenario& s, const std::string& label, Outputs& out) {
  require_nonlinear(s, "regime");
  const RegimeReport r = regime_report(s.ode);
  json result{{"case", std::string(to_string(r.regime))},
              {"case_description", std::string(describe(r.regime))},
              {"verdict", std::string(to_string(r.verdict))},
              {"thresholds", thresholds_json(r.derived)},
              {"equilibria", json::array()}};
  for (const auto& eq : r.equilibria) result["equilibria"].push_back(equilibrium_json(eq));
  if (out.format() == "json") {
    out.write("regime", label, "", result.dump(2) + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"case", "verdict", "B", "m0", "m1", "mstar", "m1star"});
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    w.field(to_string(r.regime)).field(to_string(r.verdict)).field(r.derived.B);
    w.field(r.derived.m0).field(r.derived.m1).field(r.derived.mstar.value_or(nan));
    w.field(r.derived.m1star.value_or(nan));
    w.end_row();
    out.write("regime", label, "", os.str());
  }
  return result;
}

inline json cmd_sweep(const Scenario& s, const std::string& label, Outputs& out) {
  require_nonlinear(s, "sweep");
  SweepOptions opt;
  opt.include_boundary = s.include_boundary;
  const BifurcationDiagram d = sweep_allee(s.ode, s.m_min, s.m_max, s.steps, opt);
  json markers = json::array();
  for (const auto& r : d.markers) {
    markers.push_back({{"m", num(r.m)}, {"branch", r.branch}, {"u", num(r.u)}, {"v", num(r.v)}});
  }
  if (out.format() == "json") {
    json rows = json::array();
    for (const auto& r : d.rows) {
      rows.push_back({{"m", num(r.m)},
                      {"branch", r.branch},
                      {"u", num(r.u)},
                      {"v", num(r.v)},
                      {"stability", std::string(to_string(r.stability.type))},
                      {"is_sn_marker", r.is_sn_marker}});
    }
    out.write("sweep", label, "", rows.dump(2) + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"m", "branch", "u", "v", "stability", "is_sn_marker"});
    for (const auto& r : d.rows) {
      w.field(r.m).field(r.branch).field(r.u).field(r.v).field(to_string(r.stability.type));
      w.field(r.is_sn_marker).end_row();
    }
    out.write("sweep", label, "", os.str());
  }
  return {{"rows", d.rows.size()}, {"markers", markers}};
}

inline json cmd_sensitivity(const Scenario& s, const std::string& label, Outputs& out) {
  require_nonlinear(s, "sensitivity");
  const SensitivityReport r = abundance_sensitivity(s.ode);
  json result{{"m", num(r.m)},   {"u1", num(r.u1)},         {"v1", num(r.v1)},
              {"total", num(r.total)}, {"C", num(r.C)},     {"du1_dm", num(r.du1_dm)},
              {"dv1_dm", num(r.dv1_dm)}, {"dT_dm", num(r.dT_dm)}};
  if (out.format() == "json") {
    out.write("sensitivity", label, "", result.dump(2) + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"m", "u1", "v1", "total", "C", "du1_dm", "dv1_dm", "dT_dm"});
    w.field(r.m).field(r.u1).field(r.v1).field(r.total).field(r.C).field(r.du1_dm);
    w.field(r.dv1_dm).field(r.dT_dm).end_row();
    out.write("sensitivity", label, "", os.str());
  }
  return result;
}

inline json cmd_simulate_ode(const Scenario& s, const std::string& label, Outputs& out) {
  require_ode(s, "simulate-ode");
  const Trajectory tr = integrate_ode(ode_kind(s), s.ode, s.x0, s.t_end, s.tol);
  if (out.format() == "json") {
    json j{{"t", tr.times}, {"u", json::array()}, {"v", json::array()}};
    for (const State& x : tr.states) {
      j["u"].push_back(x.u);
      j["v"].push_back(x.v);
    }
    out.write("simulate-ode", label, "", j.dump() + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"t", "u", "v"});
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      w.field(tr.times[i]).field(tr.states[i].u).field(tr.states[i].v).end_row();
    }
    out.write("simulate-ode", label, "", os.str());
  }
  if (tr.event == TerminalEvent::StepFailure) {
    throw NumericError("trajectory integration failed at t=" + format_number(tr.final_time()));
  }
  return {{"event", std::string(to_string(tr.event))},
          {"final_time", num(tr.final_time())},
          {"final_state", {num(tr.final_state().u), num(tr.final_state().v)}},
          {"points", tr.times.size()}};
}

inline json cmd_basin(const Scenario& s, const std::string& label, Outputs& out) {
  require_nonlinear(s, "basin");
  const BasinMap b = basin_map(s.ode, s.grid, s.basin_tol);
  std::map<std::string, int> counts;
  for (const auto& l : b.labels) ++counts[l];
  if (out.format() == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < b.nodes.size(); ++i) {
      rows.push_back({{"u0", b.nodes[i].u}, {"v0", b.nodes[i].v}, {"label", b.labels[i]}});
    }
    out.write("basin", label, "", rows.dump(2) + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"u0", "v0", "label"});
    for (std::size_t i = 0; i < b.nodes.size(); ++i) {
      w.field(b.nodes[i].u).field(b.nodes[i].v).field(b.labels[i]).end_row();
    }
    out.write("basin", label, "", os.str());
  }
  return {{"nodes", b.nodes.size()}, {"labels", counts}};
}

inline json cmd_portrait(const Scenario& s, const std::string& label, Outputs& out) {
  require_ode(s, "portrait");
  PortraitOptions opt;
  opt.model = ode_kind(s);
  opt.t_end = s.t_end;
  opt.tol = s.tol;
  const PortraitData d = phase_portrait(s.ode, s.grid, opt);
  struct Row {
    State x, f;
    std::string kind;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) rows.push_back({d.nodes[i], d.field[i], "field"});
  for (std::size_t k = 0; k < d.trajectories.size(); ++k) {
    const std::string kind = "traj-" + std::to_string(k);
    for (const State& x : d.trajectories[k].states) rows.push_back({x, model_rhs(opt.model, s.ode, x), kind});
  }
  json eqs = json::array();
  for (const auto& eq : d.equilibria) {
    rows.push_back({eq.state(), model_rhs(opt.model, s.ode, eq.state()),
                    "eq:" + std::string(to_string(eq.kind)) + ":" +
                        std::string(to_string(eq.stability.type))});
    eqs.push_back(equilibrium_json(eq));
  }
  if (out.format() == "json") {
    json j = json::array();
    for (const Row& r : rows) {
      j.push_back({{"x_u", r.x.u}, {"x_v", r.x.v}, {"f_u", r.f.u}, {"f_v", r.f.v}, {"kind", r.kind}});
    }
    out.write("portrait", label, "", j.dump() + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"x_u", "x_v", "f_u", "f_v", "kind"});
    for (const Row& r : rows) w.field(r.x.u).field(r.x.v).field(r.f.u).field(r.f.v).field(r.kind).end_row();
    out.write("portrait", label, "", os.str());
  }
  json terminal = json::array();
  std::map<std::string, int> limits;
  for (const auto& tr : d.trajectories) {
    ++limits[nearest_label(d.equilibria, tr.final_state(), 1e-4)];
  }
  return {{"equilibria", eqs}, {"seeds", d.seeds.size()}, {"limits", limits}};
}

inline json cmd_simulate_pde(const Scenario& s, const std::string& label, Outputs& out) {
  if (!is_pde(s.model)) throw ValidationError("simulate-pde needs a PDE scenario");
  const DiscretizedProblem prob = build_pde_problem(s.pde);
  const PdeSeries series = integrate_pde(prob);
  const Functionals f = pde_functionals(series, prob);

  if (out.format() == "json") {
    json snaps = json::array();
    for (std::size_t k = 0; k < series.times.size(); ++k) {
      snaps.push_back({{"t", series.times[k]}, {"u", series.u[k]}, {"v", series.v[k]}});
    }
    out.write("simulate-pde", label, "snapshots", json{{"x", series.x}, {"snapshots", snaps}}.dump() + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"t", "x", "u", "v"});
    for (std::size_t k = 0; k < series.times.size(); ++k) {
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        w.field(series.times[k]).field(series.x[i]).field(series.u[k][i]).field(series.v[k][i]).end_row();
      }
    }
    out.write("simulate-pde", label, "snapshots", os.str());
  }
  auto row_json = [](const FunctionalRow& r) {
    return json{{"t", num(r.t)},           {"min_u", num(r.min_u)},   {"max_u", num(r.max_u)},
                {"min_v", num(r.min_v)},   {"max_v", num(r.max_v)},   {"mass_u", num(r.mass_u)},
                {"mass_v", num(r.mass_v)}, {"logmass_u", num(r.logmass_u)},
                {"gronwall_monitor", num(r.gronwall)}};
  };
  if (out.format() == "json") {
    json rows = json::array();
    for (const auto& r : f.rows) rows.push_back(row_json(r));
    out.write("simulate-pde", label, "functionals", rows.dump(2) + "\n");
  } else {
    std::ostringstream os;
    CsvWriter w(os);
    w.header({"t", "min_u", "max_u", "min_v", "max_v", "mass_u", "mass_v", "logmass_u",
              "gronwall_monitor"});
    for (const auto& r : f.rows) {
      w.field(r.t).field(r.min_u).field(r.max_u).field(r.min_v).field(r.max_v).field(r.mass_u);
      w.field(r.mass_v).field(r.logmass_u).field(r.gronwall).end_row();
    }
    out.write("simulate-pde", label, "functionals", os.str());
  }
  json result{{"status", series.status == PdeStatus::Completed ? "completed" : "failed"},
              {"snapshots", series.times.size()},
              {"accepted_steps", series.accepted_steps},
              {"rejected_steps", series.rejected_steps},
              {"comparison_bound", num(f.comparison_bound)},
              {"final", row_json(f.rows.back())},
              {"warnings", series.warnings}};
  if (series.status == PdeStatus::Failed) {
    throw NumericError("PDE integration failed at t=" + format_number(series.failure_time) +
                       " in cell " + std::to_string(*series.failure_cell) + " of " +
                       std::string(1, *series.failure_component));
  }
  return result;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using Command = json (*)(const Scenario&, const std::string&, Outputs&);

inline Command command_by_name(const std::string& name) {
  static const std::map<std::string, Command> table{
      {"equilibria", cmd_equilibria},   {"regime", cmd_regime},       {"sweep", cmd_sweep},
      {"sensitivity", cmd_sensitivity}, {"simulate-ode", cmd_simulate_ode},
      {"basin", cmd_basin},             {"portrait", cmd_portrait},   {"simulate-pde", cmd_simulate_pde}};
  return table.at(name);
}

inline json presets_listing() {
  json list = json::array();
  for (const auto& p : presets()) {
    json labels = json::array();
    for (const auto& v : p.variants) labels.push_back(v.label);
    const Scenario& first = p.variants.front().scenario;
    list.push_back({{"name", p.name},
                    {"description", p.description},
                    {"command", first.command},
                    {"model", std::string(to_string(first.model))},
                    {"variants", labels}});
  }
  return list;
}

inline void add_run_options(CLI::App* sc, Flags& f) {
  sc->add_option("--preset", f.preset, "bundled parameter set (see `presets list`)");
  sc->add_option("--scenario", f.scenario, "JSON scenario file or a previous run manifest");
  sc->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  sc->add_option("--out", f.out, "output file, or directory when ending in '/'");
}

inline void add_ode_options(CLI::App* sc, Flags& f) {
  sc->add_option("--m", f.m, "Allee threshold parameter");
  sc->add_option("--e", f.e, "patch-1 mortality");
  sc->add_option("--h", f.h, "patch-1 competition");
  sc->add_option("--delta", f.delta, "dispersal rate");
  sc->add_option("--s", f.s, "patch-2 growth rate");
  sc->add_option("--model", f.model, "nonlinear | linear dispersal");
}

}  // namespace detail

/// Runs one command. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Two-patch Allee-effect dispersal models: equilibria, bifurcations, ODE and PDE runs",
               kToolName};
  app.set_help_flag("--help", "print this help");  // -h would collide with --h
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags f;

  const std::vector<std::string> commands{"equilibria",   "regime", "sweep",    "sensitivity",
                                          "simulate-ode", "basin",  "portrait", "simulate-pde"};
  std::map<std::string, CLI::App*> subs;
  subs["equilibria"] = app.add_subcommand("equilibria", "equilibrium table with stability labels");
  subs["regime"] = app.add_subcommand("regime", "regime case and global verdict");
  subs["sweep"] = app.add_subcommand("sweep", "bifurcation diagram in m");
  subs["sensitivity"] = app.add_subcommand("sensitivity", "dT/dm at E1");
  subs["simulate-ode"] = app.add_subcommand("simulate-ode", "single ODE trajectory");
  subs["basin"] = app.add_subcommand("basin", "basin-of-attraction labels on a grid");
  subs["portrait"] = app.add_subcommand("portrait", "vector field and seeded trajectories");
  subs["simulate-pde"] = app.add_subcommand("simulate-pde", "method-of-lines PDE run");
  CLI::App* presets_cmd = app.add_subcommand("presets", "bundled presets");
  presets_cmd->require_subcommand(1);
  CLI::App* presets_list = presets_cmd->add_subcommand("list", "list presets");

  for (const auto& name : commands) {
    CLI::App* sc = subs[name];
    add_run_options(sc, f);
    if (name != "simulate-pde") add_ode_options(sc, f);
  }
  for (const char* name : {"simulate-ode", "portrait", "basin"}) {
    subs[name]->add_option("--t-end", f.t_end, "integration horizon");
    subs[name]->add_option("--tol", f.tol, "integrator tolerance");
  }
  subs["simulate-ode"]->add_option("--u0", f.u0, "initial u");
  subs["simulate-ode"]->add_option("--v0", f.v0, "initial v");
  subs["sweep"]->add_option("--m-min", f.m_min, "sweep start");
  subs["sweep"]->add_option("--m-max", f.m_max, "sweep end");
  subs["sweep"]->add_option("--steps", f.steps, "number of m values, endpoints included");
  subs["sweep"]->add_flag("--include-boundary", f.include_boundary, "also emit axis equilibria");
  for (const char* name : {"basin", "portrait"}) {
    CLI::App* sc = subs[name];
    sc->add_option("--u-min", f.u_min);
    sc->add_option("--u-max", f.u_max);
    sc->add_option("--v-min", f.v_min);
    sc->add_option("--v-max", f.v_max);
    sc->add_option("--nu", f.nu, "nodes along u");
    sc->add_option("--nv", f.nv, "nodes along v");
  }
  subs["basin"]->add_option("--basin-tol", f.basin_tol, "distance counted as convergence");
  {
    CLI::App* sc = subs["simulate-pde"];
    sc->add_option("--kind", f.kind, "linear | nonlinear dispersal");
    sc->add_option("--form", f.form, "nonlinear operator: pointwise | divergence");
    sc->add_option("--delta1", f.delta1);
    sc->add_option("--delta2", f.delta2);
    sc->add_option("--L", f.L, "domain length");
    sc->add_option("--L1", f.L1, "patch boundary");
    sc->add_option("--N", f.N, "cell count");
    sc->add_option("--snapshots", f.snapshots, "number of output times");
    sc->add_option("--t-end", f.t_end, "final time");
    sc->add_option("--tol", f.tol, "time-integration tolerance");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (presets_list->parsed()) {
      json manifest{{"tool", kToolName},
                    {"version", kVersion},
                    {"command", "presets list"},
                    {"timestamp", utc_timestamp()},
                    {"result", presets_listing()}};
      out << manifest.dump(2) << "\n";
      return kOk;
    }
    std::string command;
    for (const auto& name : commands) {
      if (subs[name]->parsed()) command = name;
    }
    const std::vector<PresetVariant> variants = resolve(command, f);
    const Command cmd = command_by_name(command);
    const Scenario& head = variants.front().scenario;
    Outputs outputs(head.out, head.format);

    json manifest{{"tool", kToolName}, {"version", kVersion}, {"command", command},
                  {"timestamp", utc_timestamp()}};
    if (f.preset) manifest["preset"] = *f.preset;
    if (variants.size() == 1 && variants.front().label.empty()) {
      manifest["scenario"] = to_json(head);
      manifest["derived"] = derived_json(head);
      manifest["result"] = cmd(head, "", outputs);
    } else {
      manifest["variants"] = json::array();
      for (const auto& v : variants) {
        json entry{{"label", v.label}, {"scenario", to_json(v.scenario)},
                   {"derived", derived_json(v.scenario)}};
        entry["result"] = cmd(v.scenario, v.label, outputs);
        manifest["variants"].push_back(entry);
      }
    }
    manifest["outputs"] = outputs.written();
    manifest["duration_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out << manifest.dump(2) << "\n";
    return kOk;
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  } catch (const ValidationError& ex) {
    err << "validation error: " << ex.what() << "\n";
    return kValidation;
  } catch (const PreconditionError& ex) {
    err << "validation error: " << ex.what() << "\n";
    return kValidation;
  } catch (const DomainError& ex) {
    err << "validation error: " << ex.what() << "\n";
    return kValidation;
  } catch (const std::exception& ex) {
    err << "numeric error: " << ex.what() << "\n";
    return kNumeric;
  }
}

}  // namespace patchdyn::cli

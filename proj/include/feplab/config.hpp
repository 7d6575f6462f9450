#pragma once

// TOML loaders for the vehicle parameter file and scenario files, plus
// dotted-key overrides. Angles are degrees in every file; everything is
// converted to radians here.

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "feplab/errors.hpp"
#include "feplab/scenario.hpp"
#include "feplab/units.hpp"

namespace feplab {

/// Contents of a vehicle parameter file.
struct VehicleModel {
  VehicleParams params;
  AeroCoeffs coeffs;
  FlightCondition condition;
  double delta_limit = deg2rad(30.0);  // rad, symmetric
  double rate_limit = deg2rad(90.0);   // rad/s, symmetric
};

namespace config_detail {

inline toml::table parse_text(std::string_view text, std::string_view source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + std::string(e.description()));
  }
}

inline toml::table parse_file(const std::filesystem::path& path) {
  try {
    return toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    throw ConfigError(path.string() + ": " + std::string(e.description()));
  }
}

/// Typed accessor over one table that remembers which keys were consumed so
/// leftovers can be reported as typos.
class Section {
 public:
  Section(const toml::table* t, std::string name) : table_(t), name_(std::move(name)) {}

  bool has(std::string_view key) const { return table_ && table_->contains(key); }

  double number(std::string_view key) {
    const toml::node* n = find(key, true);
    if (auto v = n->value<double>()) return *v;
    throw ConfigError(where(key) + " must be a number");
  }
  double number(std::string_view key, double fallback) { return has(key) ? number(key) : fallback; }

  bool boolean(std::string_view key, bool fallback) {
    if (!has(key)) return fallback;
    const toml::node* n = find(key, true);
    if (auto v = n->value_exact<bool>()) return *v;
    throw ConfigError(where(key) + " must be true or false");
  }

  std::string string(std::string_view key, std::string fallback) {
    if (!has(key)) return fallback;
    const toml::node* n = find(key, true);
    if (auto v = n->value_exact<std::string>()) return *v;
    throw ConfigError(where(key) + " must be a string");
  }

  std::vector<double> numbers(std::string_view key) {
    const toml::node* n = find(key, true);
    const toml::array* arr = n->as_array();
    if (!arr) throw ConfigError(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& el : *arr) {
      auto v = el.value<double>();
      if (!v) throw ConfigError(where(key) + " must be an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.contains(std::string(k.str())))
        throw ConfigError("unknown key '" + qualified(k.str()) + "'");
    }
  }

 private:
  const toml::node* find(std::string_view key, bool required) {
    const toml::node* n = table_ ? table_->get(key) : nullptr;
    if (!n && required) throw ConfigError("missing required key '" + qualified(key) + "'");
    used_.insert(std::string(key));
    return n;
  }
  std::string qualified(std::string_view key) const {
    return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
  }
  std::string where(std::string_view key) const { return "'" + qualified(key) + "'"; }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

inline const toml::table* subtable(const toml::table& root, std::string_view key) {
  const toml::node* n = root.get(key);
  if (!n) return nullptr;
  if (const toml::table* t = n->as_table()) return t;
  throw ConfigError("'" + std::string(key) + "' must be a table");
}

inline void reject_unknown_sections(const toml::table& root,
                                    std::initializer_list<std::string_view> sections,
                                    std::initializer_list<std::string_view> top_keys) {
  for (const auto& [k, v] : root) {
    const std::string_view key = k.str();
    bool known = false;
    for (auto s : sections) known |= (key == s && v.is_table());
    for (auto s : top_keys) known |= (key == s && !v.is_table());
    if (!known) throw ConfigError("unknown key or section '" + std::string(key) + "'");
  }
}

}  // namespace config_detail

/// Parameter file: every field is required.
inline VehicleModel vehicle_model_from_toml(const toml::table& root) {
  using config_detail::Section;
  config_detail::reject_unknown_sections(root, {"vehicle", "aero", "condition", "actuator"}, {});
  VehicleModel m;
  Section veh(config_detail::subtable(root, "vehicle"), "vehicle");
  m.params.mass = veh.number("mass");
  m.params.inertia_yy = veh.number("inertia_yy");
  m.params.ref_area = veh.number("ref_area");
  m.params.diameter = veh.number("diameter");
  m.params.gravity = veh.number("gravity");
  veh.reject_unknown();

  Section aero(config_detail::subtable(root, "aero"), "aero");
  m.condition.mach = aero.number("mach");
  m.coeffs.C_Z_alpha = aero.number("C_Z_alpha");
  m.coeffs.C_Z_delta = aero.number("C_Z_delta");
  m.coeffs.C_m_0 = aero.number("C_m_0");
  m.coeffs.C_m_alpha = aero.number("C_m_alpha");
  m.coeffs.C_m_q = aero.number("C_m_q");
  m.coeffs.C_m_delta = aero.number("C_m_delta");
  aero.reject_unknown();

  Section cond(config_detail::subtable(root, "condition"), "condition");
  m.condition.V = cond.number("V");
  m.condition.rho = cond.number("rho");
  cond.reject_unknown();

  Section act(config_detail::subtable(root, "actuator"), "actuator");
  m.delta_limit = deg2rad(act.number("delta_max_deg"));
  m.rate_limit = deg2rad(act.number("rate_max_deg_s"));
  act.reject_unknown();

  if (!m.params.valid()) throw ConfigError("vehicle parameters must be strictly positive");
  if (!m.coeffs.finite()) throw ConfigError("aerodynamic coefficients must be finite");
  if (!m.condition.valid()) throw ConfigError("condition V and rho must be positive");
  if (!(m.delta_limit > 0.0) || !(m.rate_limit > 0.0))
    throw ConfigError("actuator limits must be positive");
  return m;
}

inline VehicleModel load_vehicle_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("cannot open " + path.string());
  return vehicle_model_from_toml(config_detail::parse_file(path));
}

/// Applies one "section.key=value" override to a parsed scenario tree. The
/// value is read as a TOML value and falls back to a bare string.
inline void apply_override(toml::table& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  toml::table parsed;
  bool as_toml = true;
  try {
    parsed = toml::parse("v = " + text);
  } catch (const toml::parse_error&) {
    as_toml = false;
  }

  std::vector<std::string> path;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    path.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (const auto& p : path)
    if (p.empty()) throw ConfigError("override key '" + key + "' has an empty component");

  toml::table* t = &root;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    toml::node* n = t->get(path[i]);
    if (!n) {
      t->insert(path[i], toml::table{});
      n = t->get(path[i]);
    }
    t = n->as_table();
    if (!t) throw ConfigError("override key '" + key + "' does not name a table entry");
  }
  if (as_toml)
    t->insert_or_assign(path.back(), *parsed.get("v"));
  else
    t->insert_or_assign(path.back(), text);
}

namespace config_detail {

inline void validate(const ScenarioConfig& c) {
  const auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    fail("name must be a non-empty file-name-safe string");
  if (!(c.duration > 0.0)) fail("sim.duration must be positive");
  if (!(c.dt > 0.0)) fail("sim.dt must be positive");
  if (c.dt > c.duration) fail("sim.dt must not exceed sim.duration");
  if (!c.params.valid()) fail("vehicle parameters must be strictly positive");
  if (!c.coeffs.finite()) fail("aerodynamic coefficients must be finite");
  if (!(c.condition.rho > 0.0)) fail("rho must be positive");
  if (!c.actuator.valid()) fail("actuator limits invalid or initial deflection outside them");
  if (!c.initial.finite()) fail("initial state must be finite");
  if (!c.envelope.valid()) fail("envelope limits must be ordered (min < max)");
  if (!c.gains.valid()) fail("controller gains must be positive");
  if (!c.hocbf.valid()) fail("filter gammas must be positive");
  if (!c.clf.valid()) fail("filter kappa must be positive and bands non-negative");
  if (!c.disturbance.finite() || !std::isfinite(c.disturbance_onset))
    fail("disturbance values must be finite");
  if (!c.uncertainty.valid()) fail("uncertainty deviations must be greater than -1");
  if (c.reference.kind == ReferenceSpec::Kind::sine && !(c.reference.period > 0.0))
    fail("reference.period must be positive");
  if (!std::isfinite(c.reference.amplitude) || !std::isfinite(c.reference.phase))
    fail("reference values must be finite");
  const auto& v = c.velocity;
  switch (v.kind) {
    case VelocityProfile::Kind::constant:
      if (!(v.V0 > 0.0) || !std::isfinite(v.V0)) fail("vehicle.V must be positive");
      break;
    case VelocityProfile::Kind::ramp:
      if (!(v.V0 > 0.0) || !(v.V1 > 0.0) || !std::isfinite(v.V0) || !std::isfinite(v.V1))
        fail("ramp speeds must be positive");
      if (!(v.t_end > v.t_start)) fail("vehicle.ramp_end must exceed vehicle.ramp_start");
      break;
    case VelocityProfile::Kind::piecewise:
      if (v.times.size() < 2 || v.times.size() != v.speeds.size())
        fail("piecewise profile needs matching breakpoint arrays of length >= 2");
      for (std::size_t i = 0; i < v.times.size(); ++i) {
        if (!(v.speeds[i] > 0.0) || !std::isfinite(v.speeds[i]))
          fail("piecewise speeds must be positive");
        if (i > 0 && !(v.times[i] > v.times[i - 1]))
          fail("piecewise breakpoint times must increase strictly");
      }
      break;
  }
}

}  // namespace config_detail

/// Builds a scenario from a parsed tree. Relative parameter-file paths are
/// resolved against base_dir. Without a parameter file the built-in nominal
/// vehicle is used.
inline ScenarioConfig scenario_from_toml(const toml::table& root,
                                         const std::filesystem::path& base_dir = {}) {
  using config_detail::Section;
  using config_detail::subtable;
  config_detail::reject_unknown_sections(
      root,
      {"vehicle", "envelope", "controller", "filter", "reference", "disturbance", "uncertainty",
       "sim"},
      {"name"});

  ScenarioConfig c;
  Section top(&root, "");
  c.name = top.string("name", c.name);

  Section veh(subtable(root, "vehicle"), "vehicle");
  VehicleModel model;
  if (veh.has("params")) {
    std::filesystem::path p = veh.string("params", "");
    if (p.is_relative()) p = base_dir / p;
    model = load_vehicle_model(p);
  }
  c.params = model.params;
  c.coeffs = model.coeffs;
  c.coeffs.include_cm0 = veh.boolean("include_cm0", false);
  c.condition = model.condition;
  c.actuator.delta_min = -model.delta_limit;
  c.actuator.delta_max = model.delta_limit;
  c.actuator.rate_min = -model.rate_limit;
  c.actuator.rate_max = model.rate_limit;
  c.actuator.time_constant = veh.number("actuator_tau", 0.0);

  const std::string profile = veh.string("velocity", "constant");
  if (profile == "constant") {
    c.velocity.kind = VelocityProfile::Kind::constant;
    c.velocity.V0 = c.velocity.V1 = veh.number("V", model.condition.V);
  } else if (profile == "ramp") {
    c.velocity.kind = VelocityProfile::Kind::ramp;
    c.velocity.V0 = veh.number("V_start");
    c.velocity.V1 = veh.number("V_end");
    c.velocity.t_start = veh.number("ramp_start", 0.0);
    c.velocity.t_end = veh.number("ramp_end");
  } else if (profile == "piecewise") {
    c.velocity.kind = VelocityProfile::Kind::piecewise;
    c.velocity.times = veh.numbers("breakpoints_t");
    c.velocity.speeds = veh.numbers("breakpoints_V");
  } else {
    throw ConfigError("vehicle.velocity must be constant, ramp or piecewise");
  }
  c.condition.V = velocity_profile(0.0, c.velocity);
  veh.reject_unknown();

  Section env(subtable(root, "envelope"), "envelope");
  c.envelope.alpha_stall_min = deg2rad(env.number("alpha_stall_min_deg", -15.0));
  c.envelope.alpha_stall_max = deg2rad(env.number("alpha_stall_max_deg", 15.0));
  c.envelope.nz_min = env.number("nz_min", -10.0);
  c.envelope.nz_max = env.number("nz_max", 10.0);
  c.envelope.V_min = env.number("V_min", 100.0);
  c.envelope.V_max = env.number("V_max", 1500.0);
  env.reject_unknown();

  Section ctl(subtable(root, "controller"), "controller");
  c.controller_label = ctl.string("preset", "aggressive");
  if (auto g = gains_preset(c.controller_label)) {
    c.gains = *g;
  } else if (c.controller_label == "custom") {
    if (!ctl.has("K_alpha") || !ctl.has("K_q"))
      throw ConfigError("controller.preset = \"custom\" needs K_alpha and K_q");
  } else {
    throw ConfigError("controller.preset must be conservative, aggressive or custom");
  }
  if (ctl.has("K_alpha") || ctl.has("K_q")) {
    c.gains.K_alpha = ctl.number("K_alpha", c.gains.K_alpha);
    c.gains.K_q = ctl.number("K_q", c.gains.K_q);
    if (c.controller_label != "custom") c.controller_label = "custom";
  }
  ctl.reject_unknown();

  Section fil(subtable(root, "filter"), "filter");
  const std::string mode = fil.string("mode", "cbf");
  const auto pm = parse_protection_mode(mode);
  if (!pm) throw ConfigError("filter.mode must be none, clip, cbf or cbf+clf");
  c.mode = *pm;
  c.hocbf.gamma_1 = fil.number("gamma_1", c.hocbf.gamma_1);
  c.hocbf.gamma_2 = fil.number("gamma_2", c.hocbf.gamma_2);
  c.clf.enabled = c.mode == ProtectionMode::cbf_clf;
  c.clf.kappa = fil.number("kappa", c.clf.kappa);
  c.clf.hysteresis_band = deg2rad(fil.number("hysteresis_deg", rad2deg(c.clf.hysteresis_band)));
  c.clf.recovery_margin =
      deg2rad(fil.number("recovery_margin_deg", rad2deg(c.clf.recovery_margin)));
  const bool filter_dt = fil.has("dt");
  if (filter_dt) c.dt = fil.number("dt");
  fil.reject_unknown();

  Section ref(subtable(root, "reference"), "reference");
  const std::string kind = ref.string("type", "step");
  if (kind == "step")
    c.reference.kind = ReferenceSpec::Kind::step;
  else if (kind == "sine")
    c.reference.kind = ReferenceSpec::Kind::sine;
  else
    throw ConfigError("reference.type must be step or sine");
  c.reference.amplitude = deg2rad(ref.number("amplitude_deg", 0.0));
  c.reference.period = ref.number("period", c.reference.period);
  c.reference.phase = deg2rad(ref.number("phase_deg", 0.0));
  ref.reject_unknown();

  Section dis(subtable(root, "disturbance"), "disturbance");
  c.disturbance.w_alpha_dot = deg2rad(dis.number("w_alpha_dot_deg_s", 0.0));
  c.disturbance.w_q_dot = deg2rad(dis.number("w_q_dot_deg_s2", 0.0));
  c.disturbance.w_nz = dis.number("w_nz", 0.0);
  c.disturbance_onset = dis.number("onset", 0.0);
  dis.reject_unknown();

  Section unc(subtable(root, "uncertainty"), "uncertainty");
  c.uncertainty.d_C_Z_alpha = unc.number("d_C_Z_alpha", 0.0);
  c.uncertainty.d_C_Z_delta = unc.number("d_C_Z_delta", 0.0);
  c.uncertainty.d_C_m_q = unc.number("d_C_m_q", 0.0);
  unc.reject_unknown();

  Section sim(subtable(root, "sim"), "sim");
  c.duration = sim.number("duration", c.duration);
  if (sim.has("dt")) {
    const double dt = sim.number("dt");
    if (filter_dt && dt != c.dt) throw ConfigError("filter.dt and sim.dt disagree");
    c.dt = dt;
  }
  c.initial.alpha = deg2rad(sim.number("alpha0_deg", 0.0));
  c.initial.q = deg2rad(sim.number("q0_deg_s", 0.0));
  c.actuator.delta = deg2rad(sim.number("delta0_deg", 0.0));
  sim.reject_unknown();

  config_detail::validate(c);
  return c;
}

inline ScenarioConfig parse_scenario(std::string_view text,
                                     const std::vector<std::string>& overrides = {},
                                     const std::filesystem::path& base_dir = {}) {
  toml::table root = config_detail::parse_text(text, "<scenario>");
  for (const auto& o : overrides) apply_override(root, o);
  ScenarioConfig c = scenario_from_toml(root, base_dir);
  c.overrides = overrides;
  return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {}) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("cannot open " + path.string());
  toml::table root = config_detail::parse_file(path);
  for (const auto& o : overrides) apply_override(root, o);
  ScenarioConfig c = scenario_from_toml(root, path.parent_path());
  c.overrides = overrides;
  return c;
}

}  // namespace feplab

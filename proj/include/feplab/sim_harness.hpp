#pragma once

// Synchronous closed-loop stepping engine, metrics and telemetry files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "feplab/errors.hpp"
#include "feplab/flight_envelope.hpp"
#include "feplab/ndi_controller.hpp"
#include "feplab/safety_filter.hpp"
#include "feplab/scenario.hpp"
#include "feplab/units.hpp"
#include "feplab/vehicle_dynamics.hpp"

namespace feplab {

/// One row of telemetry. Angles in degrees, rates in deg/s, psi_k in deg/s^k.
struct SimRecord {
  double t = 0.0;
  double alpha = 0.0;
  double alpha_r = 0.0;
  double alpha_crit_min = 0.0;
  double alpha_crit_max = 0.0;
  double q = 0.0;
  double delta = 0.0;
  double delta_star = 0.0;
  double delta_rate = 0.0;
  double nz = 0.0;
  double V = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double psi_1_1 = 0.0;
  double psi_1_2 = 0.0;
  double psi_2_1 = 0.0;
  double psi_2_2 = 0.0;
  FilterMode mode = FilterMode::pass_through;
  QpStatus qp_status = QpStatus::feasible;
  bool upper_active = false;  // upper-side HOCBF or recovery constraint binding
  bool lower_active = false;
  bool rate_limited = false;  // realized fin rate sits on the rate limit
  Limiter upper_limiter = Limiter::stall;
  Limiter lower_limiter = Limiter::stall;
};

struct Metrics {
  double max_violation = 0.0;       // deg
  double time_in_violation = 0.0;   // s
  double min_h1 = 0.0;              // deg
  double min_h2 = 0.0;              // deg
  double tracking_rmse = 0.0;       // deg
  double peak_delta_rate = 0.0;     // deg/s
  double max_abs_delta = 0.0;       // deg
  std::size_t steps_at_rate_limit = 0;
  std::size_t steps_recovery = 0;
  std::size_t steps_relaxed = 0;
  std::size_t steps_both_sides_active = 0;
};

struct SimResult {
  std::vector<SimRecord> records;
  Metrics metrics;
};

inline std::size_t record_count(double duration, double dt) {
  // A tiny allowance keeps durations that are exact multiples of dt (in
  // decimal) from losing their last step to rounding.
  return static_cast<std::size_t>(std::floor(duration / dt * (1.0 + 1e-12))) + 1;
}

namespace harness_detail {

inline double violation_deg(const SimRecord& r) {
  return std::max({0.0, r.alpha - r.alpha_crit_max, r.alpha_crit_min - r.alpha});
}

}  // namespace harness_detail

/// Tracking RMSE over records with t <= t_end.
inline double tracking_rmse(const std::vector<SimRecord>& records,
                            double t_end = std::numeric_limits<double>::infinity()) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.t > t_end) break;
    const double e = r.alpha - r.alpha_r;
    sum += e * e;
    ++n;
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

inline Metrics compute_metrics(const std::vector<SimRecord>& records) {
  if (records.empty()) throw std::invalid_argument("compute_metrics: no records");
  const double dt = records.size() > 1 ? records[1].t - records[0].t : 0.0;
  Metrics m;
  m.min_h1 = std::numeric_limits<double>::infinity();
  m.min_h2 = std::numeric_limits<double>::infinity();
  std::size_t violating = 0;
  for (const auto& r : records) {
    const double v = harness_detail::violation_deg(r);
    m.max_violation = std::max(m.max_violation, v);
    if (v > 0.0) ++violating;
    m.min_h1 = std::min(m.min_h1, r.h1);
    m.min_h2 = std::min(m.min_h2, r.h2);
    m.peak_delta_rate = std::max(m.peak_delta_rate, std::abs(r.delta_rate));
    m.max_abs_delta = std::max(m.max_abs_delta, std::abs(r.delta));
    if (r.rate_limited) ++m.steps_at_rate_limit;
    if (r.mode == FilterMode::recovery) ++m.steps_recovery;
    if (r.qp_status == QpStatus::relaxed) ++m.steps_relaxed;
    if (r.upper_active && r.lower_active) ++m.steps_both_sides_active;
  }
  m.time_in_violation = static_cast<double>(violating) * dt;
  m.tracking_rmse = tracking_rmse(records);
  return m;
}

/// Runs one scenario. Controller and filter see the nominal coefficients and
/// no disturbance; the plant integrates the perturbed coefficients with the
/// disturbance switched on from the onset time.
inline SimResult run_scenario(const ScenarioConfig& cfg) {
  const AeroCoeffs nominal = cfg.coeffs;
  const AeroCoeffs truth = apply_uncertainty(cfg.coeffs, cfg.uncertainty);
  const std::size_t n = record_count(cfg.duration, cfg.dt);

  SimResult out;
  out.records.reserve(n);
  PitchState x = cfg.initial;
  ActuatorState act = cfg.actuator;
  act.delta_rate = 0.0;
  FilterMemory mem;
  const bool filtered = cfg.mode == ProtectionMode::cbf || cfg.mode == ProtectionMode::cbf_clf;
  ClfConfig clf = cfg.clf;
  clf.enabled = cfg.mode == ProtectionMode::cbf_clf;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;

    // (1) flight condition and envelope at the current airspeed
    const VelocitySample vs = velocity_sample(t, cfg.velocity);
    FlightCondition cond = cfg.condition;
    cond.V = vs.V;
    const AlphaBounds bounds = alpha_crit_bounds(cond, cfg.params, nominal, cfg.envelope);
    const BoundRates rates = alpha_crit_bound_rates(bounds, cond, vs.V_dot, vs.V_ddot);

    // (2) reference
    double alpha_r = reference_signal(t, cfg.reference);
    if (cfg.mode == ProtectionMode::clip) alpha_r = reference_clip(alpha_r, bounds);

    // (3) performance command
    const double delta_star =
        ndi_command(alpha_r, x, act.delta, cond, nominal, cfg.params, cfg.gains);

    // (4) protection
    filter_observe(mem, x, cfg.dt);
    const FilterDecision d =
        filtered ? filter_step(delta_star, x, act, cond, nominal, cfg.params, bounds, cfg.hocbf,
                               clf, cfg.dt, mem, rates)
                 : unfiltered_step(delta_star, x, act, cond, nominal, cfg.params, bounds,
                                   cfg.hocbf, cfg.dt, rates);

    // (5) actuator
    act = actuator_step(d.delta_safe, act, cfg.dt);

    // (7) record the state at t with the deflection held over [t, t + dt)
    const Disturbance w = t >= cfg.disturbance_onset ? cfg.disturbance : Disturbance{};
    SimRecord r;
    r.t = t;
    r.alpha = rad2deg(x.alpha);
    r.alpha_r = rad2deg(alpha_r);
    r.alpha_crit_min = rad2deg(bounds.alpha_crit_min);
    r.alpha_crit_max = rad2deg(bounds.alpha_crit_max);
    r.q = rad2deg(x.q);
    r.delta = rad2deg(act.delta);
    r.delta_star = rad2deg(delta_star);
    r.delta_rate = rad2deg(act.delta_rate);
    r.nz = load_factor(x, act.delta, cond, truth, cfg.params, w);
    r.V = cond.V;
    r.h1 = rad2deg(bounds.alpha_crit_max - x.alpha);
    r.h2 = rad2deg(x.alpha - bounds.alpha_crit_min);
    r.psi_1_1 = rad2deg(d.barrier.psi_1_1);
    r.psi_1_2 = rad2deg(d.barrier.psi_1_2);
    r.psi_2_1 = rad2deg(d.barrier.psi_2_1);
    r.psi_2_2 = rad2deg(d.barrier.psi_2_2);
    r.mode = d.mode;
    r.qp_status = d.qp_status;
    r.upper_active =
        d.has_active(ConstraintTag::hocbf_upper) || d.has_active(ConstraintTag::clf_upper);
    r.lower_active =
        d.has_active(ConstraintTag::hocbf_lower) || d.has_active(ConstraintTag::clf_lower);
    const double rate_tol = 1e-9 * std::max(act.rate_max, -act.rate_min);
    r.rate_limited = act.delta_rate >= act.rate_max - rate_tol ||
                     act.delta_rate <= act.rate_min + rate_tol;
    r.upper_limiter = bounds.upper_limiter;
    r.lower_limiter = bounds.lower_limiter;
    out.records.push_back(r);

    // (6) plant, advancing to the next record
    if (k + 1 < n) {
      filter_predict(mem, x, act.delta, cond, nominal, cfg.params, cfg.dt);
      x = step_rk4(x, act.delta, cond, truth, cfg.params, w, cfg.dt);
      if (!x.finite()) throw SimulationAbort("non-finite state", k + 1);
    }
  }
  out.metrics = compute_metrics(out.records);
  return out;
}

// ---- telemetry -------------------------------------------------------------

inline const char* csv_header() {
  return "t,alpha,alpha_r,alpha_crit_min,alpha_crit_max,q,delta,delta_star,delta_rate,nz,V,"
         "h1,h2,psi_1_1,psi_1_2,psi_2_1,psi_2_2,mode,qp_status,upper_active,lower_active,"
         "rate_limited,upper_limiter,lower_limiter";
}

/// Floats are printed with 9 significant digits ("%.9g").
inline void write_csv(std::ostream& os, const std::vector<SimRecord>& records) {
  os << csv_header() << '\n';
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << buf << ',';
  };
  for (const auto& r : records) {
    for (double v : {r.t, r.alpha, r.alpha_r, r.alpha_crit_min, r.alpha_crit_max, r.q, r.delta,
                     r.delta_star, r.delta_rate, r.nz, r.V, r.h1, r.h2, r.psi_1_1, r.psi_1_2,
                     r.psi_2_1, r.psi_2_2})
      num(v);
    os << to_string(r.mode) << ',' << to_string(r.qp_status) << ',' << int(r.upper_active) << ','
       << int(r.lower_active) << ',' << int(r.rate_limited) << ',' << to_string(r.upper_limiter)
       << ',' << to_string(r.lower_limiter) << '\n';
  }
}

inline nlohmann::ordered_json metrics_json(const ScenarioConfig& cfg, const Metrics& m) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["mode"] = to_string(cfg.mode);
  j["controller"] = cfg.controller_label;
  j["K_alpha"] = cfg.gains.K_alpha;
  j["K_q"] = cfg.gains.K_q;
  j["gamma_1"] = cfg.hocbf.gamma_1;
  j["gamma_2"] = cfg.hocbf.gamma_2;
  j["duration"] = cfg.duration;
  j["dt"] = cfg.dt;
  j["overrides"] = cfg.overrides;
  auto& mj = j["metrics"];
  mj["max_violation_deg"] = m.max_violation;
  mj["time_in_violation_s"] = m.time_in_violation;
  mj["min_h1_deg"] = m.min_h1;
  mj["min_h2_deg"] = m.min_h2;
  mj["tracking_rmse_deg"] = m.tracking_rmse;
  mj["peak_delta_rate_deg_s"] = m.peak_delta_rate;
  mj["max_abs_delta_deg"] = m.max_abs_delta;
  mj["steps_at_rate_limit"] = m.steps_at_rate_limit;
  mj["steps_recovery"] = m.steps_recovery;
  mj["steps_relaxed"] = m.steps_relaxed;
  mj["steps_both_sides_active"] = m.steps_both_sides_active;
  return j;
}

struct OutputPaths {
  std::filesystem::path csv;
  std::filesystem::path metrics;
};

inline OutputPaths output_paths(const std::filesystem::path& dir, const std::string& name) {
  return {dir / (name + ".csv"), dir / (name + ".metrics.json")};
}

/// Writes `<name>.csv` and `<name>.metrics.json`. Existing files are an
/// error unless overwrite is set.
inline OutputPaths write_outputs(const std::filesystem::path& dir, const ScenarioConfig& cfg,
                                 const SimResult& res, bool overwrite) {
  const OutputPaths p = output_paths(dir, cfg.name);
  if (!overwrite) {
    for (const auto& f : {p.csv, p.metrics})
      if (std::filesystem::exists(f))
        throw ConfigError(f.string() + " already exists (use --force to overwrite)");
  }
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(p.csv, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.csv.string());
    write_csv(os, res.records);
  }
  {
    std::ofstream os(p.metrics, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.metrics.string());
    os << metrics_json(cfg, res.metrics).dump(2) << '\n';
  }
  return p;
}

}  // namespace feplab

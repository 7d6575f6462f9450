#pragma once

// HOCBF safety filter on the angle of attack, with an optional CLF-style
// recovery constraint for states that have already left the safe set, and the
// reference-clipping baseline.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "feplab/flight_envelope.hpp"
#include "feplab/interval_qp.hpp"
#include "feplab/units.hpp"
#include "feplab/vehicle_dynamics.hpp"

namespace feplab {

/// Linear class-K gains shared by the upper and lower barriers.
struct HocbfGains {
  double gamma_1 = 2.0;  // 1/s
  double gamma_2 = 1.0;  // 1/s

  bool valid() const { return gamma_1 > 0.0 && gamma_2 > 0.0; }
};

struct ClfConfig {
  bool enabled = false;
  double kappa = 5.0;                           // 1/s
  double hysteresis_band = deg2rad(0.05);       // recovery releases once h >= band
  double recovery_margin = deg2rad(0.1);        // recovery drives h toward this level

  bool valid() const { return kappa > 0.0 && hysteresis_band >= 0.0 && recovery_margin >= 0.0; }
};

/// c0 + c1 * delta
struct Affine {
  double c0 = 0.0;
  double c1 = 0.0;

  double at(double delta) const { return c0 + c1 * delta; }

  friend Affine operator+(Affine x, const Affine& y) { return {x.c0 + y.c0, x.c1 + y.c1}; }
  friend Affine operator-(Affine x, const Affine& y) { return {x.c0 - y.c0, x.c1 - y.c1}; }
  friend Affine operator+(Affine x, double y) { return {x.c0 + y, x.c1}; }
  friend Affine operator+(double y, Affine x) { return {x.c0 + y, x.c1}; }
  friend Affine operator-(double y, const Affine& x) { return {y - x.c0, -x.c1}; }
  friend Affine operator-(const Affine& x, double y) { return {x.c0 - y, x.c1}; }
  friend Affine operator*(double s, const Affine& x) { return {s * x.c0, s * x.c1}; }
};

/// Barrier values and the psi chain for both sides. psi_i_0 = h_i; each
/// further entry is the time derivative of the previous one plus gamma_k times
/// it. T is double for a plain evaluation or Affine when alpha_dot and
/// alpha_ddot depend on the candidate fin command.
template <class T>
struct BarrierEvalT {
  double h1 = 0.0;
  double h2 = 0.0;
  double psi_1_0 = 0.0;
  T psi_1_1{};
  T psi_1_2{};
  double psi_2_0 = 0.0;
  T psi_2_1{};
  T psi_2_2{};
};

using BarrierEval = BarrierEvalT<double>;

/// Builds h1 = alpha_max - alpha, h2 = alpha - alpha_min and their psi chains.
/// Bound rates are zero at constant airspeed, which leaves the quasi-static form.
template <class T>
BarrierEvalT<T> barrier_eval(double alpha, const T& alpha_dot, const T& alpha_ddot,
                             const AlphaBounds& bounds, const HocbfGains& g,
                             const BoundRates& rates = {}) {
  BarrierEvalT<T> e;
  e.h1 = bounds.alpha_crit_max - alpha;
  e.h2 = alpha - bounds.alpha_crit_min;

  const T h1_dot = rates.max_dot - alpha_dot;
  const T h1_ddot = rates.max_ddot - alpha_ddot;
  const T h2_dot = alpha_dot - rates.min_dot;
  const T h2_ddot = alpha_ddot - rates.min_ddot;

  e.psi_1_0 = e.h1;
  e.psi_1_1 = h1_dot + g.gamma_1 * e.psi_1_0;
  const T psi_1_1_dot = h1_ddot + g.gamma_1 * h1_dot;
  e.psi_1_2 = psi_1_1_dot + g.gamma_2 * e.psi_1_1;

  e.psi_2_0 = e.h2;
  e.psi_2_1 = h2_dot + g.gamma_1 * e.psi_2_0;
  const T psi_2_1_dot = h2_ddot + g.gamma_1 * h2_dot;
  e.psi_2_2 = psi_2_1_dot + g.gamma_2 * e.psi_2_1;
  return e;
}

/// alpha_dot, q_dot and alpha_ddot as affine functions of the candidate fin
/// command, with delta_dot = (delta - prev_delta) / dt. Nominal model only.
struct AffineRates {
  Affine alpha_dot;
  Affine q_dot;
  Affine alpha_ddot;
};

inline AffineRates affine_rates(const PitchState& x, double prev_delta, double dt,
                                const FlightCondition& cond, const AeroCoeffs& c,
                                const VehicleParams& p) {
  const double A = force_gain(cond, p);
  const double B = moment_gain(cond, p);
  AffineRates r;
  r.alpha_dot = {alpha_dot(x, 0.0, cond, c, p), A * c.C_Z_delta};
  r.q_dot = {q_dot(x, 0.0, cond, c, p), B * c.C_m_delta};
  const Affine delta_dot{-prev_delta / dt, 1.0 / dt};
  r.alpha_ddot = (A * c.C_Z_alpha) * r.alpha_dot + (A * c.C_Z_delta) * delta_dot + r.q_dot;
  return r;
}

/// psi_1_2 >= 0 and psi_2_2 >= 0 written as a*delta + b >= 0.
inline std::array<LinearConstraint, 2> assemble_hocbf_constraints(
    const PitchState& x, double prev_delta, double dt, const FlightCondition& cond,
    const AeroCoeffs& c, const VehicleParams& p, const AlphaBounds& bounds, const HocbfGains& g,
    const BoundRates& rates = {}) {
  const AffineRates r = affine_rates(x, prev_delta, dt, cond, c, p);
  const auto e = barrier_eval(x.alpha, r.alpha_dot, r.alpha_ddot, bounds, g, rates);
  return {LinearConstraint{e.psi_1_2.c1, e.psi_1_2.c0, ConstraintTag::hocbf_upper},
          LinearConstraint{e.psi_2_2.c1, e.psi_2_2.c0, ConstraintTag::hocbf_lower}};
}

/// State the filter carries between steps. The caller owns it together with
/// the applied fin deflection.
struct FilterMemory {
  bool recovering_upper = false;
  bool recovering_lower = false;
  // Nominal one-step prediction of the state, used to estimate how far the
  // real plant departs from the filter's model.
  bool has_prediction = false;
  PitchState predicted{};
  double alpha_dot_mismatch = 0.0;  // rad/s
};

/// Records the nominal prediction for the step about to be integrated.
inline void filter_predict(FilterMemory& mem, const PitchState& x, double applied_delta,
                           const FlightCondition& cond, const AeroCoeffs& c,
                           const VehicleParams& p, double dt) {
  mem.predicted = step_rk4(x, applied_delta, cond, c, p, Disturbance{}, dt);
  mem.has_prediction = true;
}

/// Updates the mismatch estimate from the measured state.
inline void filter_observe(FilterMemory& mem, const PitchState& x, double dt) {
  mem.alpha_dot_mismatch = mem.has_prediction ? (x.alpha - mem.predicted.alpha) / dt : 0.0;
}

/// Latches recovery when h drops below zero and releases it once h has
/// climbed back to the hysteresis band inside the safe set.
inline bool update_recovery_latch(bool active, double h, const ClfConfig& clf) {
  if (h < 0.0) return true;
  if (h >= clf.hysteresis_band) return false;
  return active;
}

/// Recovery constraints h_dot_i >= kappa * (margin - h_i) for each latched
/// side, where h_dot uses the nominal alpha_dot plus the mismatch estimate.
inline std::vector<LinearConstraint> assemble_clf_constraints(
    const PitchState& x, const FlightCondition& cond, const AeroCoeffs& c, const VehicleParams& p,
    const AlphaBounds& bounds, const ClfConfig& clf, FilterMemory& mem,
    const BoundRates& rates = {}) {
  std::vector<LinearConstraint> out;
  if (!clf.enabled) return out;
  const double h1 = bounds.alpha_crit_max - x.alpha;
  const double h2 = x.alpha - bounds.alpha_crit_min;
  mem.recovering_upper = update_recovery_latch(mem.recovering_upper, h1, clf);
  mem.recovering_lower = update_recovery_latch(mem.recovering_lower, h2, clf);

  const Affine ad =
      Affine{alpha_dot(x, 0.0, cond, c, p), force_gain(cond, p) * c.C_Z_delta} +
      mem.alpha_dot_mismatch;
  if (mem.recovering_upper) {
    const Affine h1_dot = rates.max_dot - ad;
    const Affine lhs = h1_dot - clf.kappa * (clf.recovery_margin - h1);
    out.push_back({lhs.c1, lhs.c0, ConstraintTag::clf_upper});
  }
  if (mem.recovering_lower) {
    const Affine h2_dot = ad - rates.min_dot;
    const Affine lhs = h2_dot - clf.kappa * (clf.recovery_margin - h2);
    out.push_back({lhs.c1, lhs.c0, ConstraintTag::clf_lower});
  }
  return out;
}

inline double reference_clip(double alpha_r, const AlphaBounds& bounds) {
  return std::clamp(alpha_r, bounds.alpha_crit_min, bounds.alpha_crit_max);
}

enum class FilterMode { pass_through, constrained, recovery, relaxed };

inline const char* to_string(FilterMode m) {
  switch (m) {
    case FilterMode::pass_through: return "pass_through";
    case FilterMode::constrained: return "constrained";
    case FilterMode::recovery: return "recovery";
    case FilterMode::relaxed: return "relaxed";
  }
  return "?";
}

struct FilterDecision {
  double delta_safe = 0.0;
  FilterMode mode = FilterMode::pass_through;
  QpStatus qp_status = QpStatus::feasible;
  double max_violation = 0.0;
  std::vector<ConstraintTag> active;
  BarrierEval barrier;

  bool has_active(ConstraintTag t) const {
    return std::find(active.begin(), active.end(), t) != active.end();
  }
};

/// Magnitude box and one-step rate box around the applied deflection.
inline std::array<LinearConstraint, 4> actuator_constraints(const ActuatorState& act, double dt) {
  const double lo_rate = act.delta + act.rate_min * dt;
  const double hi_rate = act.delta + act.rate_max * dt;
  return {LinearConstraint{1.0, -act.delta_min, ConstraintTag::box},
          LinearConstraint{-1.0, act.delta_max, ConstraintTag::box},
          LinearConstraint{1.0, -lo_rate, ConstraintTag::rate},
          LinearConstraint{-1.0, hi_rate, ConstraintTag::rate}};
}

inline BarrierEval evaluate_barriers(const PitchState& x, double delta, double prev_delta,
                                     double dt, const FlightCondition& cond, const AeroCoeffs& c,
                                     const VehicleParams& p, const AlphaBounds& bounds,
                                     const HocbfGains& g, const BoundRates& rates = {}) {
  const AffineRates r = affine_rates(x, prev_delta, dt, cond, c, p);
  return barrier_eval(x.alpha, r.alpha_dot.at(delta), r.alpha_ddot.at(delta), bounds, g, rates);
}

namespace detail {

inline FilterMode classify(double delta_safe, double delta_star, QpStatus status, bool recovering) {
  if (recovering) return FilterMode::recovery;
  if (status == QpStatus::relaxed) return FilterMode::relaxed;
  return std::abs(delta_safe - delta_star) <= 1e-12 ? FilterMode::pass_through
                                                    : FilterMode::constrained;
}

inline bool inputs_finite(double delta_star, const PitchState& x, const ActuatorState& act,
                          const FlightCondition& cond, const AlphaBounds& bounds) {
  return std::isfinite(delta_star) && x.finite() && std::isfinite(act.delta) && cond.valid() &&
         std::isfinite(bounds.alpha_crit_max) && std::isfinite(bounds.alpha_crit_min);
}

}  // namespace detail

/// Actuator limits only, no envelope constraints. Used by the unfiltered and
/// reference-clipping configurations so telemetry stays comparable.
inline FilterDecision unfiltered_step(double delta_star, const PitchState& x,
                                      const ActuatorState& act, const FlightCondition& cond,
                                      const AeroCoeffs& c, const VehicleParams& p,
                                      const AlphaBounds& bounds, const HocbfGains& g, double dt,
                                      const BoundRates& rates = {}) {
  FilterDecision d;
  if (!detail::inputs_finite(delta_star, x, act, cond, bounds)) {
    d.delta_safe = act.delta;
    d.mode = FilterMode::constrained;
    d.qp_status = QpStatus::error;
    return d;
  }
  const auto hard = actuator_constraints(act, dt);
  const QpSolution s = solve(delta_star, hard, {});
  d.delta_safe = s.delta;
  d.qp_status = s.status;
  d.active = s.active;
  d.mode = detail::classify(d.delta_safe, delta_star, s.status, false);
  d.barrier = evaluate_barriers(x, d.delta_safe, act.delta, dt, cond, c, p, bounds, g, rates);
  return d;
}

/// One safety-filter step: min (delta - delta*)^2 subject to the HOCBF (or,
/// per latched side, the recovery) constraints and the actuator boxes.
inline FilterDecision filter_step(double delta_star, const PitchState& x, const ActuatorState& act,
                                  const FlightCondition& cond, const AeroCoeffs& c,
                                  const VehicleParams& p, const AlphaBounds& bounds,
                                  const HocbfGains& g, const ClfConfig& clf, double dt,
                                  FilterMemory& mem, const BoundRates& rates = {}) {
  FilterDecision d;
  if (!detail::inputs_finite(delta_star, x, act, cond, bounds) || !(dt > 0.0)) {
    d.delta_safe = act.delta;
    d.mode = FilterMode::constrained;
    d.qp_status = QpStatus::error;
    return d;
  }

  const auto hard = actuator_constraints(act, dt);
  const auto hocbf = assemble_hocbf_constraints(x, act.delta, dt, cond, c, p, bounds, g, rates);
  const auto recovery = assemble_clf_constraints(x, cond, c, p, bounds, clf, mem, rates);

  std::vector<LinearConstraint> soft;
  bool upper_replaced = false;
  bool lower_replaced = false;
  for (const auto& r : recovery) {
    soft.push_back(r);
    upper_replaced |= r.tag == ConstraintTag::clf_upper;
    lower_replaced |= r.tag == ConstraintTag::clf_lower;
  }
  if (!upper_replaced) soft.push_back(hocbf[0]);
  if (!lower_replaced) soft.push_back(hocbf[1]);

  bool finite = true;
  for (const auto& s : soft) finite &= s.finite();
  if (!finite) {
    d.delta_safe = act.delta;
    d.mode = FilterMode::constrained;
    d.qp_status = QpStatus::error;
    return d;
  }

  const QpSolution s = solve(delta_star, hard, soft);
  d.delta_safe = s.delta;
  d.qp_status = s.status;
  d.max_violation = s.max_violation;
  d.active = s.active;
  d.mode = detail::classify(d.delta_safe, delta_star, s.status, !recovery.empty());
  d.barrier = evaluate_barriers(x, d.delta_safe, act.delta, dt, cond, c, p, bounds, g, rates);
  return d;
}

}  // namespace feplab

#pragma once

// Longitudinal (pitch-plane) missile model: angle of attack and pitch rate
// driven by a single fin deflection. All quantities are SI with radians.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "feplab/units.hpp"

namespace feplab {

struct VehicleParams {
  double mass = 453.0;          // kg
  double inertia_yy = 1407.0;   // kg m^2
  double ref_area = 0.073;      // m^2
  double diameter = 0.30;       // m
  double gravity = 9.80665;     // m/s^2

  bool valid() const {
    return mass > 0.0 && inertia_yy > 0.0 && ref_area > 0.0 && diameter > 0.0 && gravity > 0.0;
  }
};

/// Single-point (Mach 2.6859) aerodynamic derivatives, per radian.
struct AeroCoeffs {
  double C_Z_alpha = -32.5925;
  double C_Z_delta = -7.1863;
  double C_m_0 = -3.277;
  double C_m_alpha = -80.4716;
  double C_m_q = -56.1499;
  double C_m_delta = -69.6272;
  // The pitching-moment equation has no constant term; C_m_0 is carried for
  // sensitivity studies only.
  bool include_cm0 = false;

  bool finite() const {
    return std::isfinite(C_Z_alpha) && std::isfinite(C_Z_delta) && std::isfinite(C_m_0) &&
           std::isfinite(C_m_alpha) && std::isfinite(C_m_q) && std::isfinite(C_m_delta);
  }
};

inline double dynamic_pressure(double rho, double V) { return 0.5 * rho * V * V; }

struct FlightCondition {
  double V = 914.0;      // m/s
  double rho = 1.225;    // kg/m^3
  double mach = 2.6859;  // held with the coefficient set

  double dynamic_pressure() const { return feplab::dynamic_pressure(rho, V); }
  bool valid() const { return V > 0.0 && rho > 0.0 && std::isfinite(V) && std::isfinite(rho); }
};

struct PitchState {
  double alpha = 0.0;  // rad
  double q = 0.0;      // rad/s

  friend PitchState operator+(PitchState a, const PitchState& b) {
    a.alpha += b.alpha;
    a.q += b.q;
    return a;
  }
  friend PitchState operator*(double s, PitchState a) {
    a.alpha *= s;
    a.q *= s;
    return a;
  }
  bool finite() const { return std::isfinite(alpha) && std::isfinite(q); }
};

struct ActuatorState {
  double delta = 0.0;       // rad
  double delta_rate = 0.0;  // rad/s, realized over the last step
  double delta_min = -deg2rad(30.0);
  double delta_max = deg2rad(30.0);
  double rate_min = -deg2rad(90.0);
  double rate_max = deg2rad(90.0);
  double time_constant = 0.0;  // s; 0 = ideal (limits only)

  bool valid() const {
    return delta_min < delta_max && rate_min < 0.0 && rate_max > 0.0 && time_constant >= 0.0 &&
           delta >= delta_min && delta <= delta_max;
  }
};

/// Additive plant-side disturbances; the controller and filter models never see them.
struct Disturbance {
  double w_alpha_dot = 0.0;  // rad/s
  double w_q_dot = 0.0;      // rad/s^2
  double w_nz = 0.0;         // g

  bool finite() const {
    return std::isfinite(w_alpha_dot) && std::isfinite(w_q_dot) && std::isfinite(w_nz);
  }
};

/// Fractional coefficient deviations, e.g. -0.40 for -40%.
struct UncertaintySet {
  double d_C_Z_alpha = 0.0;
  double d_C_Z_delta = 0.0;
  double d_C_m_q = 0.0;

  bool valid() const { return d_C_Z_alpha > -1.0 && d_C_Z_delta > -1.0 && d_C_m_q > -1.0; }
};

/// QS/(mV): scales the normal-force terms of the alpha equation.
inline double force_gain(const FlightCondition& cond, const VehicleParams& p) {
  return cond.dynamic_pressure() * p.ref_area / (p.mass * cond.V);
}

/// QSd/I_yy: scales the pitching-moment terms.
inline double moment_gain(const FlightCondition& cond, const VehicleParams& p) {
  return cond.dynamic_pressure() * p.ref_area * p.diameter / p.inertia_yy;
}

inline double alpha_dot(const PitchState& x, double delta, const FlightCondition& cond,
                        const AeroCoeffs& c, const VehicleParams& p, const Disturbance& w = {}) {
  return force_gain(cond, p) * (c.C_Z_alpha * x.alpha + c.C_Z_delta * delta) + x.q + w.w_alpha_dot;
}

inline double q_dot(const PitchState& x, double delta, const FlightCondition& cond,
                    const AeroCoeffs& c, const VehicleParams& p, const Disturbance& w = {}) {
  const double damping = c.C_m_q * p.diameter / (2.0 * cond.V);
  double moment = c.C_m_alpha * x.alpha + damping * x.q + c.C_m_delta * delta;
  if (c.include_cm0) moment += c.C_m_0;
  return moment_gain(cond, p) * moment + w.w_q_dot;
}

inline double load_factor(const PitchState& x, double delta, const FlightCondition& cond,
                          const AeroCoeffs& c, const VehicleParams& p, const Disturbance& w = {}) {
  const double qs = cond.dynamic_pressure() * p.ref_area;
  return qs / (p.mass * p.gravity) * (c.C_Z_alpha * x.alpha + c.C_Z_delta * delta) + w.w_nz;
}

/// Second derivative of alpha with the coefficients and Q frozen over the step.
inline double alpha_ddot_est(const PitchState& x, double delta, double delta_rate,
                             const FlightCondition& cond, const AeroCoeffs& c,
                             const VehicleParams& p, const Disturbance& w = {}) {
  const double ad = alpha_dot(x, delta, cond, c, p, w);
  const double qd = q_dot(x, delta, cond, c, p, w);
  return force_gain(cond, p) * (c.C_Z_alpha * ad + c.C_Z_delta * delta_rate) + qd;
}

inline AeroCoeffs apply_uncertainty(AeroCoeffs c, const UncertaintySet& u) {
  c.C_Z_alpha *= 1.0 + u.d_C_Z_alpha;
  c.C_Z_delta *= 1.0 + u.d_C_Z_delta;
  c.C_m_q *= 1.0 + u.d_C_m_q;
  return c;
}

/// Advances the fin by one step. The realized rate is clamped to the rate box
/// and the deflection to the magnitude box; a NaN command holds the fin.
inline ActuatorState actuator_step(double command, ActuatorState act, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("actuator_step: dt must be positive");
  double desired = 0.0;
  if (!std::isnan(command)) {
    const double gap = command - act.delta;
    desired = act.time_constant > 0.0 ? gap / act.time_constant : gap / dt;
    if (std::isnan(desired)) desired = 0.0;  // inf - inf
  }
  const double rate = std::clamp(desired, act.rate_min, act.rate_max);
  const double next = std::clamp(act.delta + rate * dt, act.delta_min, act.delta_max);
  act.delta_rate = (next - act.delta) / dt;
  act.delta = next;
  return act;
}

/// Classical fourth-order Runge-Kutta step for any state supporting `+` and
/// scalar `*`.
template <class State, class Derivative>
State rk4_step(const State& x, double dt, Derivative&& f) {
  const State k1 = f(x);
  const State k2 = f(x + (0.5 * dt) * k1);
  const State k3 = f(x + (0.5 * dt) * k2);
  const State k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One RK4 step of the pitch dynamics with the fin held over the step.
inline PitchState step_rk4(const PitchState& x, double delta, const FlightCondition& cond,
                           const AeroCoeffs& c, const VehicleParams& p, const Disturbance& w,
                           double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
  return rk4_step(x, dt, [&](const PitchState& s) {
    return PitchState{alpha_dot(s, delta, cond, c, p, w), q_dot(s, delta, cond, c, p, w)};
  });
}

}  // namespace feplab

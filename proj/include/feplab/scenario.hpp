#pragma once

// Scenario description: everything one closed-loop run needs, plus the
// reference and airspeed schedules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feplab/flight_envelope.hpp"
#include "feplab/ndi_controller.hpp"
#include "feplab/safety_filter.hpp"
#include "feplab/units.hpp"
#include "feplab/vehicle_dynamics.hpp"

namespace feplab {

enum class ProtectionMode { none, clip, cbf, cbf_clf };

inline const char* to_string(ProtectionMode m) {
  switch (m) {
    case ProtectionMode::none: return "none";
    case ProtectionMode::clip: return "clip";
    case ProtectionMode::cbf: return "cbf";
    case ProtectionMode::cbf_clf: return "cbf+clf";
  }
  return "?";
}

inline std::optional<ProtectionMode> parse_protection_mode(std::string_view s) {
  if (s == "none") return ProtectionMode::none;
  if (s == "clip") return ProtectionMode::clip;
  if (s == "cbf") return ProtectionMode::cbf;
  if (s == "cbf+clf") return ProtectionMode::cbf_clf;
  return std::nullopt;
}

struct ReferenceSpec {
  enum class Kind { step, sine };
  Kind kind = Kind::step;
  double amplitude = 0.0;  // rad
  double period = 20.0;    // s, sine only
  double phase = 0.0;      // rad, sine only
};

/// Step: amplitude for every t >= 0. Sine: A sin(2 pi t / T + phi).
inline double reference_signal(double t, const ReferenceSpec& r) {
  if (r.kind == ReferenceSpec::Kind::step) return r.amplitude;
  return r.amplitude * std::sin(2.0 * kPi * t / r.period + r.phase);
}

struct VelocityProfile {
  enum class Kind { constant, ramp, piecewise };
  Kind kind = Kind::constant;
  double V0 = 914.0;       // constant speed, or ramp start
  double V1 = 914.0;       // ramp end
  double t_start = 0.0;    // ramp start time
  double t_end = 150.0;    // ramp end time
  std::vector<double> times;   // piecewise breakpoints, strictly increasing
  std::vector<double> speeds;  // piecewise speeds at the breakpoints
};

struct VelocitySample {
  double V = 0.0;
  double V_dot = 0.0;
  double V_ddot = 0.0;  // zero for every supported shape away from corners
};

/// Airspeed and its rate at time t. Piecewise-linear shapes hold their end
/// values outside the breakpoint range.
inline VelocitySample velocity_sample(double t, const VelocityProfile& v) {
  switch (v.kind) {
    case VelocityProfile::Kind::constant:
      return {v.V0, 0.0, 0.0};
    case VelocityProfile::Kind::ramp: {
      if (t <= v.t_start) return {v.V0, 0.0, 0.0};
      if (t >= v.t_end) return {v.V1, 0.0, 0.0};
      const double slope = (v.V1 - v.V0) / (v.t_end - v.t_start);
      return {v.V0 + slope * (t - v.t_start), slope, 0.0};
    }
    case VelocityProfile::Kind::piecewise: {
      if (t <= v.times.front()) return {v.speeds.front(), 0.0, 0.0};
      if (t >= v.times.back()) return {v.speeds.back(), 0.0, 0.0};
      const auto it = std::upper_bound(v.times.begin(), v.times.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - v.times.begin()) - 1;
      const double slope = (v.speeds[i + 1] - v.speeds[i]) / (v.times[i + 1] - v.times[i]);
      return {v.speeds[i] + slope * (t - v.times[i]), slope, 0.0};
    }
  }
  return {};
}

inline double velocity_profile(double t, const VelocityProfile& v) { return velocity_sample(t, v).V; }

struct ScenarioConfig {
  std::string name = "scenario";
  double duration = 5.0;  // s
  double dt = 1e-3;       // s

  VehicleParams params;
  AeroCoeffs coeffs;          // nominal model, used by controller and filter
  FlightCondition condition;  // rho and Mach; V comes from the velocity profile
  ActuatorState actuator;     // limits, time constant and initial deflection
  PitchState initial;
  VelocityProfile velocity;

  EnvelopeSpec envelope;
  ReferenceSpec reference;
  ControllerGains gains = ControllerGains::aggressive();
  std::string controller_label = "aggressive";

  ProtectionMode mode = ProtectionMode::cbf;
  HocbfGains hocbf;
  ClfConfig clf;

  Disturbance disturbance;
  double disturbance_onset = 0.0;  // s
  UncertaintySet uncertainty;

  std::vector<std::string> overrides;  // dotted key=value strings, echoed into metrics
};

}  // namespace feplab

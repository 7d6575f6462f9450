#pragma once

// Cascaded nonlinear dynamic inversion: an outer alpha loop produces a
// commanded alpha rate, which is inverted into a pitch-rate command; the
// inner loop inverts the moment equation for the fin deflection.

#include <cmath>
#include <optional>
#include <string_view>

#include "feplab/errors.hpp"
#include "feplab/vehicle_dynamics.hpp"

namespace feplab {

struct ControllerGains {
  double K_alpha = 36.53;  // 1/s
  double K_q = 12.22;      // 1/s

  bool valid() const { return K_alpha > 0.0 && K_q > 0.0; }

  static constexpr ControllerGains conservative() { return {4.00, 1.2}; }
  static constexpr ControllerGains aggressive() { return {36.53, 12.22}; }
};

inline std::optional<ControllerGains> gains_preset(std::string_view name) {
  if (name == "conservative") return ControllerGains::conservative();
  if (name == "aggressive") return ControllerGains::aggressive();
  return std::nullopt;
}

inline double outer_alpha_loop(double alpha_r, double alpha, const ControllerGains& k) {
  return k.K_alpha * (alpha_r - alpha);
}

/// Pitch-rate command that makes the alpha equation produce alpha_dot_c, using
/// the fin deflection currently applied.
inline double alpha_inversion(double alpha_dot_c, const PitchState& x, double delta_applied,
                              const FlightCondition& cond, const AeroCoeffs& c,
                              const VehicleParams& p) {
  return alpha_dot_c - force_gain(cond, p) * (c.C_Z_alpha * x.alpha + c.C_Z_delta * delta_applied);
}

inline double inner_q_loop(double q_c, double q, const ControllerGains& k) {
  return k.K_q * (q_c - q);
}

/// Fin deflection that makes q_dot equal q_dot_c. The commanded acceleration
/// is scaled by I_yy/(QSd) so that it sits in coefficient units alongside the
/// moment derivatives.
inline double q_inversion(double q_dot_c, const PitchState& x, const FlightCondition& cond,
                          const AeroCoeffs& c, const VehicleParams& p) {
  if (std::abs(c.C_m_delta) < 1e-9)
    throw DegenerateCoefficientError("q_inversion: |C_m_delta| below 1e-9");
  double moment = c.C_m_alpha * x.alpha + c.C_m_q * p.diameter / (2.0 * cond.V) * x.q;
  if (c.include_cm0) moment += c.C_m_0;
  return (q_dot_c / moment_gain(cond, p) - moment) / c.C_m_delta;
}

/// Unsaturated performance command delta*.
inline double ndi_command(double alpha_r, const PitchState& x, double delta_applied,
                          const FlightCondition& cond, const AeroCoeffs& c, const VehicleParams& p,
                          const ControllerGains& k) {
  const double alpha_dot_c = outer_alpha_loop(alpha_r, x.alpha, k);
  const double q_c = alpha_inversion(alpha_dot_c, x, delta_applied, cond, c, p);
  const double q_dot_c = inner_q_loop(q_c, x.q, k);
  return q_inversion(q_dot_c, x, cond, c, p);
}

}  // namespace feplab

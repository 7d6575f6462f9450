#pragma once

// Speed-dependent angle-of-attack limits from the V-n diagram. Stall limits
// are constant; structural limits follow from inverting the load-factor
// equation at zero fin deflection and shrink as 1/V^2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "feplab/errors.hpp"
#include "feplab/units.hpp"
#include "feplab/vehicle_dynamics.hpp"

namespace feplab {

struct EnvelopeSpec {
  double alpha_stall_min = -deg2rad(15.0);
  double alpha_stall_max = deg2rad(15.0);
  double nz_min = -10.0;
  double nz_max = 10.0;
  double V_min = 100.0;
  double V_max = 1500.0;

  bool valid() const {
    return alpha_stall_min < alpha_stall_max && nz_min < nz_max && V_min < V_max;
  }
};

enum class Limiter { stall, structural };

inline const char* to_string(Limiter l) { return l == Limiter::stall ? "stall" : "structural"; }

struct AlphaBounds {
  double alpha_crit_min = 0.0;
  double alpha_crit_max = 0.0;
  Limiter lower_limiter = Limiter::stall;
  Limiter upper_limiter = Limiter::stall;

  double width() const { return alpha_crit_max - alpha_crit_min; }
};

/// Time derivatives of the bounds, nonzero only on a structural side while
/// the airspeed is changing.
struct BoundRates {
  double max_dot = 0.0;
  double max_ddot = 0.0;
  double min_dot = 0.0;
  double min_ddot = 0.0;
};

inline constexpr double kDegenerateCoefficient = 1e-9;

/// Returns (alpha_min_structural, alpha_max_structural). Because C_Z_alpha is
/// negative the lower load limit maps to the upper alpha bound.
inline std::pair<double, double> alpha_structural_bounds(const FlightCondition& cond,
                                                         const VehicleParams& p,
                                                         const AeroCoeffs& c,
                                                         const EnvelopeSpec& spec) {
  if (std::abs(c.C_Z_alpha) < kDegenerateCoefficient)
    throw DegenerateCoefficientError("alpha_structural_bounds: |C_Z_alpha| below 1e-9");
  const double per_g = p.mass * p.gravity / (cond.dynamic_pressure() * p.ref_area * c.C_Z_alpha);
  const double a = spec.nz_min * per_g;
  const double b = spec.nz_max * per_g;
  return {std::min(a, b), std::max(a, b)};
}

inline AlphaBounds alpha_crit_bounds(const FlightCondition& cond, const VehicleParams& p,
                                     const AeroCoeffs& c, const EnvelopeSpec& spec) {
  const auto [s_min, s_max] = alpha_structural_bounds(cond, p, c, spec);
  AlphaBounds b;
  if (s_max < spec.alpha_stall_max) {
    b.alpha_crit_max = s_max;
    b.upper_limiter = Limiter::structural;
  } else {
    b.alpha_crit_max = spec.alpha_stall_max;
    b.upper_limiter = Limiter::stall;
  }
  if (s_min > spec.alpha_stall_min) {
    b.alpha_crit_min = s_min;
    b.lower_limiter = Limiter::structural;
  } else {
    b.alpha_crit_min = spec.alpha_stall_min;
    b.lower_limiter = Limiter::stall;
  }
  return b;
}

/// Bound derivatives for airspeed rate V_dot and acceleration V_ddot at
/// constant density: a structural bound scales as 1/V^2, so
/// d/dt = -2 a V_dot / V and d2/dt2 = a (6 V_dot^2 / V^2 - 2 V_ddot / V).
inline BoundRates alpha_crit_bound_rates(const AlphaBounds& bounds, const FlightCondition& cond,
                                         double V_dot, double V_ddot) {
  BoundRates r;
  const double V = cond.V;
  const auto first = [&](double a) { return -2.0 * a * V_dot / V; };
  const auto second = [&](double a) {
    return a * (6.0 * V_dot * V_dot / (V * V) - 2.0 * V_ddot / V);
  };
  if (bounds.upper_limiter == Limiter::structural) {
    r.max_dot = first(bounds.alpha_crit_max);
    r.max_ddot = second(bounds.alpha_crit_max);
  }
  if (bounds.lower_limiter == Limiter::structural) {
    r.min_dot = first(bounds.alpha_crit_min);
    r.min_ddot = second(bounds.alpha_crit_min);
  }
  return r;
}

inline bool nz_safe_contains(double nz, const EnvelopeSpec& spec) {
  return spec.nz_min <= nz && nz <= spec.nz_max;
}

inline bool alpha_safe_contains(double alpha, const AlphaBounds& b) {
  return b.alpha_crit_min <= alpha && alpha <= b.alpha_crit_max;
}

}  // namespace feplab

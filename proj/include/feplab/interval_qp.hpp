#pragma once

// Exact solver for min (delta - delta*)^2 over a single scalar subject to
// half-space constraints a*delta + b >= 0. Hard constraints (actuator boxes)
// are never relaxed; when the soft constraints cannot all hold, the maximum
// soft violation is minimized instead.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "feplab/errors.hpp"

namespace feplab {

enum class ConstraintTag { hocbf_upper, hocbf_lower, clf_upper, clf_lower, box, rate };

inline const char* to_string(ConstraintTag t) {
  switch (t) {
    case ConstraintTag::hocbf_upper: return "hocbf_upper";
    case ConstraintTag::hocbf_lower: return "hocbf_lower";
    case ConstraintTag::clf_upper: return "clf_upper";
    case ConstraintTag::clf_lower: return "clf_lower";
    case ConstraintTag::box: return "box";
    case ConstraintTag::rate: return "rate";
  }
  return "?";
}

/// a*delta + b >= 0
struct LinearConstraint {
  double a = 0.0;
  double b = 0.0;
  ConstraintTag tag = ConstraintTag::box;

  double eval(double delta) const { return a * delta + b; }
  double violation(double delta) const { return std::max(0.0, -eval(delta)); }
  bool finite() const { return std::isfinite(a) && std::isfinite(b); }
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool empty() const { return lo > hi; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  double clamp(double x) const { return std::min(std::max(x, lo), hi); }

  static Interval whole() { return {}; }
  static Interval none() {
    return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }
};

inline constexpr double kQpEpsilon = 1e-12;

inline Interval constraint_to_interval(const LinearConstraint& c) {
  if (c.a > kQpEpsilon) return {-c.b / c.a, std::numeric_limits<double>::infinity()};
  if (c.a < -kQpEpsilon) return {-std::numeric_limits<double>::infinity(), -c.b / c.a};
  return c.b >= 0.0 ? Interval::whole() : Interval::none();
}

inline Interval intersect(std::span<const Interval> parts) {
  Interval out = Interval::whole();
  for (const auto& p : parts) {
    out.lo = std::max(out.lo, p.lo);
    out.hi = std::min(out.hi, p.hi);
  }
  return out;
}

inline Interval intersect(std::span<const LinearConstraint> cs, Interval start = Interval::whole()) {
  for (const auto& c : cs) {
    const Interval p = constraint_to_interval(c);
    start.lo = std::max(start.lo, p.lo);
    start.hi = std::min(start.hi, p.hi);
  }
  return start;
}

enum class QpStatus { feasible, relaxed, error };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::feasible: return "feasible";
    case QpStatus::relaxed: return "relaxed";
    case QpStatus::error: return "error";
  }
  return "?";
}

struct QpSolution {
  double delta = 0.0;
  QpStatus status = QpStatus::feasible;
  double max_violation = 0.0;
  std::vector<ConstraintTag> active;
};

inline double max_violation(std::span<const LinearConstraint> cs, double delta) {
  double v = 0.0;
  for (const auto& c : cs) v = std::max(v, c.violation(delta));
  return v;
}

namespace detail {

// Scale used for "numerically on the boundary" tests.
inline double constraint_tolerance(const LinearConstraint& c, double delta) {
  return 1e-12 * (1.0 + std::abs(c.a * delta) + std::abs(c.b));
}

inline void collect_active(QpSolution& sol, std::span<const LinearConstraint> hard,
                           std::span<const LinearConstraint> soft) {
  for (auto cs : {hard, soft})
    for (const auto& c : cs)
      if (c.eval(sol.delta) <= constraint_tolerance(c, sol.delta)) sol.active.push_back(c.tag);
}

}  // namespace detail

inline QpSolution solve(double delta_star, std::span<const LinearConstraint> hard,
                        std::span<const LinearConstraint> soft) {
  const Interval box = intersect(hard);
  if (box.empty()) throw HardInfeasibleError("interval_qp: hard constraints have no common point");

  QpSolution sol;
  const Interval feasible = intersect(soft, box);
  if (!feasible.empty()) {
    sol.delta = feasible.clamp(delta_star);
    sol.status = QpStatus::feasible;
    sol.max_violation = 0.0;
    detail::collect_active(sol, hard, soft);
    return sol;
  }

  // The max-violation objective is convex piecewise linear, so its minimum
  // over the box sits at an endpoint, a zero of one constraint, or a crossing
  // of two constraints.
  std::vector<double> candidates;
  if (std::isfinite(box.lo)) candidates.push_back(box.lo);
  if (std::isfinite(box.hi)) candidates.push_back(box.hi);
  for (std::size_t i = 0; i < soft.size(); ++i) {
    if (std::abs(soft[i].a) > kQpEpsilon) candidates.push_back(-soft[i].b / soft[i].a);
    for (std::size_t j = i + 1; j < soft.size(); ++j) {
      const double da = soft[i].a - soft[j].a;
      if (std::abs(da) > kQpEpsilon) candidates.push_back((soft[j].b - soft[i].b) / da);
    }
  }
  double best_v = std::numeric_limits<double>::infinity();
  double best_x = box.clamp(delta_star);
  for (double x : candidates) {
    if (!box.contains(x)) continue;
    const double v = max_violation(soft, x);
    if (v < best_v || (v == best_v && std::abs(x - delta_star) < std::abs(best_x - delta_star))) {
      best_v = v;
      best_x = x;
    }
  }
  if (!std::isfinite(best_v)) best_v = max_violation(soft, best_x);

  // Among all points reaching the optimal violation, take the one closest to
  // delta*: the level set {v(delta) <= best_v} is itself an interval. The
  // slack only absorbs rounding in best_v.
  double scale = 1.0;
  for (const auto& c : soft) scale = std::max(scale, std::abs(c.a * best_x) + std::abs(c.b));
  const double level = best_v + 16.0 * std::numeric_limits<double>::epsilon() * scale;
  std::vector<LinearConstraint> shifted(soft.begin(), soft.end());
  for (auto& c : shifted) c.b += level;
  const Interval argmin = intersect(shifted, box);
  sol.delta = argmin.empty() ? best_x : argmin.clamp(delta_star);
  sol.status = QpStatus::relaxed;
  sol.max_violation = max_violation(soft, sol.delta);
  detail::collect_active(sol, hard, soft);
  return sol;
}

}  // namespace feplab

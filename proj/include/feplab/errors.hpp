#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace feplab {

/// Invalid or incomplete configuration (parameter file, scenario file, override).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A coefficient that must be inverted is numerically zero.
class DegenerateCoefficientError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Hard constraints of the scalar QP are infeasible. Actuator boxes always
/// intersect when the current deflection is inside them, so this signals a
/// broken invariant rather than a runtime condition.
class HardInfeasibleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The closed loop produced a non-finite state.
class SimulationAbort : public std::runtime_error {
 public:
  SimulationAbort(const std::string& what, std::size_t record_index)
      : std::runtime_error(what + " (record " + std::to_string(record_index) + ")"),
        record_index_(record_index) {}

  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_;
};

}  // namespace feplab

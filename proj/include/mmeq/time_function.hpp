#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mmeq {

class NonpositiveCapacity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a congestion function takes its capacity from.
struct CapacitySource {
  enum class Kind { None, Fixed, Fleet };
  Kind kind = Kind::None;
  double value = 0.0;  // only meaningful for Fixed

  static CapacitySource none() { return {}; }
  static CapacitySource fixed(double c) { return {Kind::Fixed, c}; }
  static CapacitySource fleet() { return {Kind::Fleet, 0.0}; }

  bool operator==(const CapacitySource&) const = default;
};

/// Travel-time function. Constant(t0) when alpha == 0 or no capacity is
/// attached, otherwise BPR: t0 * (1 + alpha * (flow / capacity)^beta).
struct TimeFunction {
  double t0 = 0.0;
  double alpha = 0.0;
  double beta = 1.0;
  CapacitySource capacity;

  bool is_constant() const {
    return alpha == 0.0 || capacity.kind == CapacitySource::Kind::None;
  }
  bool uses_fleet() const {
    return !is_constant() && capacity.kind == CapacitySource::Kind::Fleet;
  }

  bool operator==(const TimeFunction&) const = default;
};

/// Hours. `capacity` is ignored for constant functions.
double eval_time(const TimeFunction& tf, double flow, double capacity);

/// d eval_time / d flow.
double eval_time_derivative(const TimeFunction& tf, double flow,
                            double capacity);

}  // namespace mmeq

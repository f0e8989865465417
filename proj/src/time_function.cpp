#include "mmeq/time_function.hpp"

#include <cmath>

namespace mmeq {

namespace {

void check_capacity(double capacity) {
  if (!(capacity > 0.0)) {
    throw NonpositiveCapacity("BPR capacity must be positive, got " +
                              std::to_string(capacity));
  }
}

}  // namespace

double eval_time(const TimeFunction& tf, double flow, double capacity) {
  if (tf.is_constant()) return tf.t0;
  check_capacity(capacity);
  const double ratio = std::max(flow, 0.0) / capacity;
  return tf.t0 * (1.0 + tf.alpha * std::pow(ratio, tf.beta));
}

double eval_time_derivative(const TimeFunction& tf, double flow,
                            double capacity) {
  if (tf.is_constant()) return 0.0;
  check_capacity(capacity);
  const double ratio = std::max(flow, 0.0) / capacity;
  if (ratio == 0.0 && tf.beta > 1.0) return 0.0;
  return tf.t0 * tf.alpha * tf.beta * std::pow(ratio, tf.beta - 1.0) /
         capacity;
}

}  // namespace mmeq

#include "cbfmarl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cbfmarl {

void VehicleParams::validate() const {
  if (!(rear_wheelbase > 0.0 && rear_wheelbase < wheelbase))
    throw std::invalid_argument("vehicle: need 0 < rear_wheelbase < wheelbase");
  if (!(body_length > 0.0 && body_width > 0.0)) throw std::invalid_argument("vehicle: body dimensions must be positive");
  if (!(v_max > 0.0)) throw std::invalid_argument("vehicle: v_max must be positive");
  if (!(accel_min < accel_max)) throw std::invalid_argument("vehicle: accel_min must be below accel_max");
  if (!(steering_rate_min < steering_rate_max))
    throw std::invalid_argument("vehicle: steering_rate_min must be below steering_rate_max");
  if (!(delta_max > 0.0 && delta_max < 0.5 * std::numbers::pi))
    throw std::invalid_argument("vehicle: delta_max must lie in (0, pi/2)");
}

ControlInput VehicleParams::clamp(const ControlInput& u) const {
  return {std::clamp(u.accel, accel_min, accel_max),
          std::clamp(u.steering_rate, steering_rate_min, steering_rate_max)};
}

double slip_angle(double delta, const VehicleParams& params) {
  if (!(std::abs(delta) < 0.5 * std::numbers::pi)) throw std::domain_error("slip_angle: |delta| must be below pi/2");
  return std::atan(std::tan(delta) * params.rear_wheelbase / params.wheelbase);
}

StateDerivative derivative(const VehicleState& s, const ControlInput& u, const VehicleParams& params) {
  const double beta = slip_angle(s.delta, params);
  return {s.v * std::cos(s.theta + beta), s.v * std::sin(s.theta + beta),
          s.v / params.wheelbase * std::tan(s.delta) * std::cos(beta), u.accel, u.steering_rate};
}

StateDerivative saturated_derivative(const VehicleState& s, const ControlInput& u, const VehicleParams& params) {
  VehicleState inside = s;
  inside.v = std::clamp(s.v, 0.0, params.v_max);
  inside.delta = std::clamp(s.delta, -params.delta_max, params.delta_max);
  StateDerivative d = derivative(inside, u, params);
  if ((s.v >= params.v_max && u.accel > 0.0) || (s.v <= 0.0 && u.accel < 0.0)) d[3] = 0.0;
  if ((s.delta >= params.delta_max && u.steering_rate > 0.0) || (s.delta <= -params.delta_max && u.steering_rate < 0.0))
    d[4] = 0.0;
  return d;
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

namespace {

VehicleState advance(const VehicleState& s, const StateDerivative& d, double h) {
  return {s.x + h * d[0], s.y + h * d[1], s.theta + h * d[2], s.v + h * d[3], s.delta + h * d[4]};
}

}  // namespace

VehicleState step(const VehicleState& state, const ControlInput& input, const VehicleParams& params, double dt) {
  const ControlInput u = params.clamp(input);
  const StateDerivative k1 = saturated_derivative(state, u, params);
  const StateDerivative k2 = saturated_derivative(advance(state, k1, 0.5 * dt), u, params);
  const StateDerivative k3 = saturated_derivative(advance(state, k2, 0.5 * dt), u, params);
  const StateDerivative k4 = saturated_derivative(advance(state, k3, dt), u, params);
  StateDerivative incr{};
  for (std::size_t i = 0; i < incr.size(); ++i) incr[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  VehicleState next = advance(state, incr, dt);
  next.v = std::clamp(next.v, 0.0, params.v_max);
  next.delta = std::clamp(next.delta, -params.delta_max, params.delta_max);
  next.theta = wrap_angle(next.theta);
  return next;
}

}  // namespace cbfmarl

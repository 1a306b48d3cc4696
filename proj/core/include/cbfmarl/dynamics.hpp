#pragma once

#include <array>
#include <numbers>

namespace cbfmarl {

/// Kinematic bicycle state [x, y, theta, v, delta].
struct VehicleState {
  double x = 0.0;      ///< m
  double y = 0.0;      ///< m
  double theta = 0.0;  ///< rad, wrapped to (-pi, pi]
  double v = 0.0;      ///< m/s
  double delta = 0.0;  ///< steering angle, rad

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Acceleration and steering rate.
struct ControlInput {
  double accel = 0.0;          ///< m/s^2
  double steering_rate = 0.0;  ///< rad/s

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct VehicleParams {
  double wheelbase = 0.16;
  double rear_wheelbase = 0.08;
  double body_length = 0.20;
  double body_width = 0.10;
  double v_max = 1.0;
  double accel_min = -5.0;
  double accel_max = 5.0;
  double steering_rate_min = -0.5 * std::numbers::pi;
  double steering_rate_max = 0.5 * std::numbers::pi;
  double delta_max = 0.25 * std::numbers::pi;

  /// Throws std::invalid_argument when limits are unordered or geometry is
  /// inconsistent.
  void validate() const;
  ControlInput clamp(const ControlInput& u) const;

  friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

using StateDerivative = std::array<double, 5>;

/// beta = atan(tan(delta) * l_r / l_wb). Throws for |delta| >= pi/2.
double slip_angle(double delta, const VehicleParams& params);

/// A(x) + B u of the kinematic bicycle model.
StateDerivative derivative(const VehicleState& state, const ControlInput& input,
                           const VehicleParams& params);

/// The same field with v and delta held inside their bounds: kinematics use
/// the clamped values and a rate pushing a state further out of bounds is
/// zeroed. Equal to derivative() for in-bound states and inputs.
StateDerivative saturated_derivative(const VehicleState& state, const ControlInput& input,
                                     const VehicleParams& params);

/// One RK4 step on saturated_derivative() with clamped input, followed by
/// clamping of v to [0, v_max], delta to [-delta_max, delta_max] and
/// wrapping of theta. Displacement never exceeds v_max * dt.
VehicleState step(const VehicleState& state, const ControlInput& input, const VehicleParams& params,
                  double dt);

double wrap_angle(double angle);

}  // namespace cbfmarl

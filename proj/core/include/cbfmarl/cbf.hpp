#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cbfmarl/dynamics.hpp"
#include "cbfmarl/geometry.hpp"
#include "cbfmarl/world.hpp"

namespace cbfmarl {

enum class RemainderMode { kZero, kConstant };

struct CbfConfig {
  double dt = 0.1;
  double gamma = 1.0;  ///< slope of the linear class-K function alpha(h) = gamma * h
  RemainderMode remainder_mode = RemainderMode::kZero;
  double remainder = 0.0;  ///< used when remainder_mode == kConstant

  void validate() const;
  double remainder_term() const { return remainder_mode == RemainderMode::kConstant ? remainder : 0.0; }

  friend bool operator==(const CbfConfig&, const CbfConfig&) = default;
};

enum class ConstraintKind { kRoadLeft, kRoadRight, kVehicle };

struct ConstraintSource {
  ConstraintKind kind = ConstraintKind::kRoadLeft;
  AgentId agent = 0;
  AgentId other = 0;  ///< only meaningful for kVehicle

  friend bool operator==(const ConstraintSource&, const ConstraintSource&) = default;
};

using StateGradient = std::array<double, 5>;

/// Contribution of one vehicle to a barrier function.
struct InvolvedAgent {
  AgentId agent = 0;
  StateGradient grad_h{};      ///< dh/dx of this vehicle's state
  StateGradient grad_h_dot{};  ///< d(h_dot)/dx of this vehicle's state
  std::array<double, 2> input_coeffs{};  ///< d(h_ddot)/d(accel, steering_rate)
};

/// h and its derivatives along the bicycle dynamics. h_ddot is affine in the
/// inputs of the involved vehicles:
///   h_ddot = h_ddot_const + sum_k input_coeffs_k . u_k
struct CbfEvaluation {
  double h = 0.0;
  double h_dot = 0.0;
  double h_ddot_const = 0.0;
  std::array<InvolvedAgent, 2> involved{};
  std::size_t involved_count = 1;
  ConstraintSource source;
  /// Argmin selection: circle of the first vehicle, circle of the second
  /// vehicle (pairs only) and boundary segment (road only).
  std::size_t circle_a = 0;
  std::size_t circle_b = 0;
  std::size_t segment = 0;

  std::span<const InvolvedAgent> terms() const { return {involved.data(), involved_count}; }
};

struct ConstraintValue {
  double psi = 0.0;
  ConstraintSource source;
};

enum class RoadSide { kLeft, kRight };

/// min over circles of (pseudo-distance to the boundary - radius), with the
/// active boundary segment frozen for differentiation.
CbfEvaluation road_cbf(AgentId agent, const VehicleState& state, RoadSide side, const Route& corridor,
                       const CircleDecomposition& decomp, const VehicleParams& params);

/// min over circle pairs of (center distance - radius sum). Throws
/// std::invalid_argument when i == j.
CbfEvaluation vehicle_pair_cbf(AgentId i, const VehicleState& state_i, AgentId j, const VehicleState& state_j,
                               const CircleDecomposition& decomp, const VehicleParams& params);

/// psi = dt h_dot + dt^2/2 h_ddot(u) + gamma h + R_T. `joint_inputs` is
/// indexed by agent id; throws std::out_of_range when an involved agent has
/// no input.
double evaluate_psi(const CbfEvaluation& eval, std::span<const ControlInput> joint_inputs, const CbfConfig& config);
ConstraintValue evaluate_constraint(const CbfEvaluation& eval, std::span<const ControlInput> joint_inputs,
                                    const CbfConfig& config);

/// Per agent: road left, road right, then one entry per other vehicle in
/// ascending id order. Pair (i, j) and (j, i) share one evaluation.
std::vector<std::vector<CbfEvaluation>> all_evaluations(const WorldState& world);

std::vector<std::vector<ConstraintValue>> all_constraints(const WorldState& world,
                                                          std::span<const ControlInput> joint_inputs,
                                                          const CbfConfig& config);

}  // namespace cbfmarl

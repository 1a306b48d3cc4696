#pragma once

#include <span>
#include <vector>

#include "cbfmarl/cbf.hpp"
#include "cbfmarl/world.hpp"

namespace cbfmarl {

/// a . u >= b in the agent's own (accel, steering_rate) input.
struct HalfPlane {
  std::array<double, 2> a{};
  double b = 0.0;
  ConstraintSource source;

  double slack(const ControlInput& u) const { return a[0] * u.accel + a[1] * u.steering_rate - b; }
};

struct InputBox {
  ControlInput lower;
  ControlInput upper;

  bool contains(const ControlInput& u, double tol = 0.0) const {
    return u.accel >= lower.accel - tol && u.accel <= upper.accel + tol && u.steering_rate >= lower.steering_rate - tol &&
           u.steering_rate <= upper.steering_rate + tol;
  }
};

struct AgentQp {
  std::vector<HalfPlane> constraints;
  InputBox box;
};

struct FilterResult {
  ControlInput u_rl;
  ControlInput u_filtered;
  double correction = 0.0;             ///< ||u_filtered - u_rl||_2 in raw input units
  double normalized_correction = 0.0;  ///< each axis divided by its half-range
  bool feasible = true;
  std::vector<ConstraintSource> active_constraints;
};

/// One half-plane per CBF constraint of `agent` (two road constraints and one
/// per other vehicle). Other vehicles' inputs stay fixed at their RL actions.
AgentQp assemble_agent_qp(const WorldState& world, std::span<const ControlInput> joint_rl_actions, AgentId agent,
                          const CbfConfig& config);
/// Same, reusing precomputed evaluations for the agent.
AgentQp assemble_agent_qp(std::span<const CbfEvaluation> agent_evals, std::span<const ControlInput> joint_rl_actions,
                          AgentId agent, const VehicleParams& params, const CbfConfig& config);

/// Exact minimizer of ||u - u_rl||^2 over the half-planes and the box by
/// enumerating candidate active sets of size zero, one and two. When the
/// problem is infeasible the result holds the point of the box with the
/// smallest worst normalized violation and feasible == false.
FilterResult solve_box_qp(const ControlInput& u_rl, std::span<const HalfPlane> constraints, const InputBox& box);

/// Fraction of results whose normalized correction exceeds epsilon. Throws
/// std::invalid_argument for an empty trajectory.
double activation_degree(std::span<const FilterResult> trajectory, double epsilon = 1e-6);

}  // namespace cbfmarl

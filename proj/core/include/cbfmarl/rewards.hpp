#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cbfmarl/cbf.hpp"
#include "cbfmarl/world.hpp"

namespace cbfmarl {

enum class RewardMethod { kCbf, kDistance, kTtc };
std::string_view to_string(RewardMethod m);
/// Parses "cbf", "distance" or "ttc"; throws std::invalid_argument otherwise.
RewardMethod parse_reward_method(std::string_view s);

struct RewardConfig {
  RewardMethod method = RewardMethod::kCbf;
  double psi_th = 0.1;
  double d_road_th = 0.005;
  double d_veh_th = 0.1;
  double t_ttc_th = 4.0;
  double w_prog = 0.1;
  std::vector<double> weights{3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0};
  /// Reference-point spacing in units of the maximum one-step movement.
  double lookahead_steps = 5.0;

  std::size_t num_reference_points() const { return weights.size(); }
  void validate() const;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct RewardBreakdown {
  double safety = 0.0;
  double progress = 0.0;
  double total = 0.0;
  std::vector<std::pair<ConstraintSource, double>> per_source;
};

/// Linear clipping: 0 for psi >= 0, -psi/psi_th for small violations,
/// saturating at -1. Throws std::invalid_argument for psi_th <= 0.
double clip_rho(double psi, double psi_th);

/// -min(max(z, 0), 1).
double clip_rho_prime(double z);

/// Mean of the road-left, road-right and averaged pairwise penalties. Expects
/// both road constraints and one pair constraint for every other agent.
/// Throws std::invalid_argument when a source is missing.
double cbf_reward(AgentId agent, std::span<const ConstraintValue> constraints, std::size_t num_agents,
                  const RewardConfig& config, std::vector<std::pair<ConstraintSource, double>>* per_source = nullptr);

/// w_prog / (v_max dt) * sum_m w_m <p_now - p_prev, d_m>, with d_m the unit
/// direction from p_prev to reference point m. Directions to points closer
/// than 1e-9 contribute nothing.
double progress_reward(const Point2& p_prev, const Point2& p_now, std::span<const Point2> ref_points,
                       std::span<const double> weights, double w_prog, double v_max, double dt);

/// Throws std::invalid_argument for a negative distance.
double distance_baseline_reward(double d_road_left, double d_road_right, std::span<const double> d_veh,
                                const RewardConfig& config);

/// First contact time of any circle pair under frozen planar velocities
/// (slip included); +infinity when the circles never touch, 0 on overlap.
double time_to_collision(const VehicleState& state_i, const VehicleState& state_j, const CircleDecomposition& decomp,
                         const VehicleParams& params);

double ttc_baseline_reward(double d_road_left, double d_road_right, std::span<const double> ttcs,
                           const RewardConfig& config);

/// Body-to-boundary distance: min over circles of pseudo-distance - radius.
/// May be negative when a circle crosses the boundary.
double road_distance(const VehicleState& state, RoadSide side, const Route& corridor, const CircleDecomposition& decomp);
/// Smallest circle-surface distance between two vehicles (may be negative).
double vehicle_distance(const VehicleState& a, const VehicleState& b, const CircleDecomposition& decomp);

/// Rewards for all agents. Safety terms use the pre-transition world and
/// joint inputs; progress uses the displacement to `next_positions`.
std::vector<RewardBreakdown> compute_rewards(const WorldState& pre, std::span<const Point2> next_positions,
                                             std::span<const ControlInput> joint_inputs, const RewardConfig& config,
                                             const CbfConfig& cbf_config);

RewardBreakdown step_reward(AgentId agent, const WorldState& pre, const Point2& next_position,
                            std::span<const ControlInput> joint_inputs, const RewardConfig& config,
                            const CbfConfig& cbf_config);

}  // namespace cbfmarl

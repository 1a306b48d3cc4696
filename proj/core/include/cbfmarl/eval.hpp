#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "cbfmarl/env.hpp"
#include "cbfmarl/marl/policy.hpp"
#include "cbfmarl/trace.hpp"

namespace cbfmarl {

struct EvalConfig {
  double t_eval = 60.0;  ///< seconds
  double w_comf = 0.2;
  double a_norm = 3.0;
  double j_norm = 20.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool deterministic_policy = true;
  bool filter_diagnostics = false;
  double activation_epsilon = 1e-6;

  void validate() const;
  /// floor(t_eval / dt), robust to representation error in the quotient.
  std::size_t steps(double dt) const;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct TotalReward {
  double value = 0.0;
  std::size_t exits = 0;
  std::size_t collision_events = 0;    ///< an inter-vehicle collision counts once
  std::size_t collided_vehicles = 0;   ///< an inter-vehicle collision counts twice
  double comfort_penalty = 0.0;
  double value_per_vehicle = 0.0;      ///< the total under the per-vehicle collision count
};

/// N_exit - N_col - w_comf / (N K) * sum_i sum_k ((a/a_norm)^2 + (j/j_norm)^2).
/// Throws std::invalid_argument unless the trace spans exactly K steps.
TotalReward total_reward(const Trace& trace, const EvalConfig& config);

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(std::uint64_t /*seed*/) {}
  virtual std::vector<ControlInput> act(const IntersectionEnv& env, const WorldState& world) = 0;
};

/// Shared actor applied to every agent's observation.
class PolicyController : public Controller {
 public:
  PolicyController(marl::PolicyParams params, bool deterministic);
  void reset(std::uint64_t seed) override;
  std::vector<ControlInput> act(const IntersectionEnv& env, const WorldState& world) override;

 private:
  marl::PolicyParams params_;
  bool deterministic_;
  std::mt19937_64 rng_;
};

class ConstantController : public Controller {
 public:
  explicit ConstantController(ControlInput u) : u_(u) {}
  std::vector<ControlInput> act(const IntersectionEnv& env, const WorldState& world) override;

 private:
  ControlInput u_;
};

/// Pure-pursuit steering toward a point ahead on the reference path and
/// proportional speed tracking. Ignores other vehicles.
class PathFollowingController : public Controller {
 public:
  explicit PathFollowingController(double target_speed = 0.6, double lookahead = 0.3);
  std::vector<ControlInput> act(const IntersectionEnv& env, const WorldState& world) override;

 private:
  double target_speed_;
  double lookahead_;
};

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  TotalReward total;
  std::size_t road_collisions = 0;
  std::size_t vehicle_collisions = 0;
  double mean_step_reward = 0.0;
  /// Only meaningful with filter diagnostics.
  double activation_degree = 0.0;
  double mean_correction = 0.0;
  std::size_t infeasible_filters = 0;
};

/// Advances `world` for `steps` transitions under `controller` and records
/// them. With `filter` set, every agent-step is also passed through the CBF
/// safety filter (the executed action stays unfiltered).
Trace rollout(const IntersectionEnv& env, WorldState& world, Controller& controller, std::size_t steps, bool filter);

/// Summary of one recorded episode.
EpisodeMetrics episode_metrics(const Trace& trace, const EvalConfig& config);

struct EvalResult {
  std::vector<EpisodeMetrics> per_seed;
  std::vector<Trace> traces;

  double mean_total() const;
  /// Agent-step fraction over all seeds; 0 without filter diagnostics.
  double activation_degree(double epsilon = 1e-6) const;
  double mean_correction() const;
};

/// One T_eval episode per seed, starting from env.reset(seed).
EvalResult evaluate_policy(Controller& controller, const IntersectionEnv& env, const EvalConfig& config);

/// Throws ConfigError when the policy does not match the environment's
/// observation size or agent count.
void check_compatible(const marl::PolicyParams& params, const IntersectionEnv& env);

}  // namespace cbfmarl

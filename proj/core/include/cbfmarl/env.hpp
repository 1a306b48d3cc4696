#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cbfmarl/cbf.hpp"
#include "cbfmarl/collision.hpp"
#include "cbfmarl/rewards.hpp"
#include "cbfmarl/world.hpp"

namespace cbfmarl {

struct EnvConfig {
  MapConfig map;
  VehicleParams vehicle;
  std::size_t num_agents = 4;
  int n_circles = 3;
  double dt = 0.1;
  std::size_t horizon_steps = 600;
  /// Spawn slots along each entry lane, spaced by this many body lengths.
  double spawn_spacing = 1.5;
  int max_spawn_attempts = 100;
  RewardConfig reward;
  CbfConfig cbf;

  void validate() const;
};

/// Ego block (v, delta, heading error), reference points in the ego frame,
/// then (dx, dy, relative heading, speed) for every other vehicle sorted by
/// distance.
using Observation = std::vector<double>;

struct ComfortSignals {
  double accel = 0.0;
  double jerk = 0.0;
};

struct StepResult {
  std::vector<RewardBreakdown> rewards;
  /// Realized acceleration and jerk of the transition, taken before respawns
  /// reset them.
  std::vector<ComfortSignals> comfort;
  std::vector<EpisodeEvent> events;
  /// Agents whose trajectory ended this step (exit or collision) and that
  /// were respawned.
  std::vector<bool> respawned;
};

class IntersectionEnv {
 public:
  explicit IntersectionEnv(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  const IntersectionMap& map() const { return *map_; }
  const CircleDecomposition& decomposition() const { return decomp_; }
  std::size_t observation_size() const;
  std::size_t spawn_capacity() const;

  /// Deterministic in `seed`. Throws ConfigError when the vehicles cannot be
  /// placed without overlap.
  WorldState reset(std::uint64_t seed) const;

  /// Rewards on the pre-transition state, integration, collision and exit
  /// detection, respawns, event logging and comfort bookkeeping. Throws
  /// std::invalid_argument on an action count mismatch.
  StepResult step(WorldState& world, std::span<const ControlInput> actions) const;

  Observation observe(const WorldState& world, AgentId agent) const;
  ComfortSignals comfort_signals(const WorldState& world, AgentId agent) const;

  /// Ground-truth checks on the exact rectangular footprints.
  bool vehicles_collide(const VehicleState& a, const VehicleState& b) const;
  bool hits_road(const VehicleState& s, const Route& route) const;
  bool reached_exit(const VehicleState& s, const Route& route) const;

 private:
  Vehicle spawn_vehicle(WorldState& world, std::span<const bool> placed) const;

  EnvConfig config_;
  std::shared_ptr<const IntersectionMap> map_;
  CircleDecomposition decomp_;
  std::size_t slots_per_lane_ = 0;
};

}  // namespace cbfmarl

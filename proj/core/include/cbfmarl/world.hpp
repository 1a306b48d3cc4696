#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "cbfmarl/dynamics.hpp"
#include "cbfmarl/geometry.hpp"
#include "cbfmarl/intersection.hpp"

namespace cbfmarl {

using AgentId = std::size_t;

enum class EventKind { kExit, kVehicleCollision, kRoadCollision };
std::string_view to_string(EventKind kind);

struct EpisodeEvent {
  EventKind kind = EventKind::kExit;
  std::size_t step = 0;
  std::array<AgentId, 2> agents{};
  std::size_t agent_count = 1;  ///< 2 for vehicle collisions, 1 otherwise

  friend bool operator==(const EpisodeEvent&, const EpisodeEvent&) = default;
};

struct Vehicle {
  VehicleState state;
  std::size_t route = 0;  ///< index into IntersectionMap::routes
  double accel = 0.0;     ///< realized longitudinal acceleration of the last step
  double jerk = 0.0;

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

/// Everything needed to advance one episode. Owned by exactly one rollout
/// worker.
struct WorldState {
  std::shared_ptr<const IntersectionMap> map;
  VehicleParams params;
  CircleDecomposition decomp;
  double dt = 0.1;
  std::vector<Vehicle> vehicles;
  std::size_t step_index = 0;
  std::mt19937_64 rng;
  std::vector<EpisodeEvent> event_log;

  std::size_t num_agents() const { return vehicles.size(); }
  const Route& route_of(AgentId i) const { return map->route(vehicles.at(i).route); }
};

}  // namespace cbfmarl

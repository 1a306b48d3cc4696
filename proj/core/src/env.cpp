#include "cbfmarl/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cbfmarl/errors.hpp"

namespace cbfmarl {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kExit: return "exit";
    case EventKind::kVehicleCollision: return "collision_vehicle";
    case EventKind::kRoadCollision: return "collision_road";
  }
  return "?";
}

void EnvConfig::validate() const {
  vehicle.validate();
  reward.validate();
  cbf.validate();
  if (num_agents < 1) throw ConfigError("env: need at least one agent");
  if (n_circles < 1) throw ConfigError("env: need at least one circle per vehicle");
  if (!(dt > 0.0)) throw ConfigError("env: dt must be positive");
  if (std::abs(cbf.dt - dt) > 1e-12) throw ConfigError("env: cbf.dt must equal the simulation dt");
  if (horizon_steps < 1) throw ConfigError("env: horizon_steps must be positive");
  if (!(spawn_spacing >= 1.0)) throw ConfigError("env: spawn_spacing must be at least one body length");
  if (max_spawn_attempts < 1) throw ConfigError("env: max_spawn_attempts must be positive");
}

IntersectionEnv::IntersectionEnv(EnvConfig config) : config_(std::move(config)) {
  try {
    config_.validate();
    map_ = std::make_shared<const IntersectionMap>(build_intersection(config_.map));
    decomp_ = decompose_rectangle(config_.vehicle.body_length, config_.vehicle.body_width, config_.n_circles);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double spacing = config_.spawn_spacing * config_.vehicle.body_length;
  while ((static_cast<double>(slots_per_lane_) + 0.5) * spacing <= config_.map.entry_length) ++slots_per_lane_;
  if (slots_per_lane_ == 0) throw ConfigError("env: entry region too short for a single spawn slot");
  if (config_.num_agents > spawn_capacity())
    throw ConfigError("env: " + std::to_string(config_.num_agents) + " agents exceed the spawn capacity of " +
                      std::to_string(spawn_capacity()));
}

std::size_t IntersectionEnv::observation_size() const {
  return 3 + 2 * config_.reward.num_reference_points() + 4 * (config_.num_agents - 1);
}

std::size_t IntersectionEnv::spawn_capacity() const {
  const std::size_t lanes = config_.map.lanes_per_direction > 1 ? 2 : 1;
  return 4 * lanes * slots_per_lane_;
}

Vehicle IntersectionEnv::spawn_vehicle(WorldState& world, std::span<const bool> placed) const {
  std::uniform_int_distribution<int> pick_entry(0, 3);
  std::uniform_int_distribution<int> pick_maneuver(0, 2);
  std::uniform_int_distribution<std::size_t> pick_slot(0, slots_per_lane_ - 1);
  const double spacing = config_.spawn_spacing * config_.vehicle.body_length;
  for (int attempt = 0; attempt < config_.max_spawn_attempts; ++attempt) {
    const auto entry = static_cast<Region>(pick_entry(world.rng));
    const auto maneuver = static_cast<Maneuver>(pick_maneuver(world.rng));
    const std::size_t slot = pick_slot(world.rng);
    const std::size_t route = IntersectionMap::route_id(entry, maneuver);
    const ReferencePath& path = map_->route(route).path;
    const double s = (static_cast<double>(slot) + 0.5) * spacing;
    const Point2 p = path.point_at(s);
    const VehicleState candidate{p.x, p.y, wrap_angle(path.heading_at(s)), 0.0, 0.0};
    bool free = true;
    for (std::size_t j = 0; j < world.vehicles.size() && free; ++j) {
      if (placed[j] && vehicle_distance(candidate, world.vehicles[j].state, decomp_) <= 0.0) free = false;
    }
    if (!free) continue;
    std::uniform_real_distribution<double> pick_speed(0.0, config_.vehicle.v_max);
    Vehicle v;
    v.state = candidate;
    v.state.v = pick_speed(world.rng);
    v.route = route;
    return v;
  }
  throw ConfigError("env: could not place a vehicle without overlap after " +
                    std::to_string(config_.max_spawn_attempts) + " attempts");
}

WorldState IntersectionEnv::reset(std::uint64_t seed) const {
  WorldState world;
  world.map = map_;
  world.params = config_.vehicle;
  world.decomp = decomp_;
  world.dt = config_.dt;
  world.rng.seed(seed);
  world.vehicles.resize(config_.num_agents);
  std::unique_ptr<bool[]> placed(new bool[config_.num_agents]());
  for (std::size_t i = 0; i < config_.num_agents; ++i) {
    world.vehicles[i] = spawn_vehicle(world, {placed.get(), config_.num_agents});
    placed[i] = true;
  }
  return world;
}

bool IntersectionEnv::vehicles_collide(const VehicleState& a, const VehicleState& b) const {
  const double reach = std::hypot(config_.vehicle.body_length, config_.vehicle.body_width);
  if (std::abs(a.x - b.x) > reach || std::abs(a.y - b.y) > reach) return false;
  return rectangles_overlap(rectangle_corners(a, config_.vehicle.body_length, config_.vehicle.body_width),
                            rectangle_corners(b, config_.vehicle.body_length, config_.vehicle.body_width));
}

bool IntersectionEnv::hits_road(const VehicleState& s, const Route& route) const {
  const Rectangle rect = rectangle_corners(s, config_.vehicle.body_length, config_.vehicle.body_width);
  if (rectangle_hits_polyline(rect, route.left) || rectangle_hits_polyline(rect, route.right)) return true;
  // A footprint that jumped across a boundary within one step.
  const Point2 c{s.x, s.y};
  return pseudo_distance(c, route.left).distance < 0.0 || pseudo_distance(c, route.right).distance < 0.0;
}

bool IntersectionEnv::reached_exit(const VehicleState& s, const Route& route) const {
  const Point2 c{s.x, s.y};
  const auto proj = project_onto_path(route.path, c);
  if (proj.arclength < route.path.length() - 1e-9) return false;
  return map_->exit_regions[static_cast<std::size_t>(route.path.exit)].contains(c);
}

StepResult IntersectionEnv::step(WorldState& world, std::span<const ControlInput> actions) const {
  const std::size_t n = world.num_agents();
  if (actions.size() != n)
    throw std::invalid_argument("step: expected " + std::to_string(n) + " actions, got " +
                                std::to_string(actions.size()));
  std::vector<ControlInput> inputs(n);
  for (std::size_t i = 0; i < n; ++i) inputs[i] = world.params.clamp(actions[i]);

  std::vector<VehicleState> next(n);
  std::vector<Point2> next_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = cbfmarl::step(world.vehicles[i].state, inputs[i], world.params, world.dt);
    next_pos[i] = {next[i].x, next[i].y};
  }

  StepResult result;
  result.comfort.reserve(n);
  result.rewards = compute_rewards(world, next_pos, inputs, config_.reward, config_.cbf);

  for (std::size_t i = 0; i < n; ++i) {
    Vehicle& v = world.vehicles[i];
    const double accel = (next[i].v - v.state.v) / world.dt;
    v.jerk = (accel - v.accel) / world.dt;
    v.accel = accel;
    v.state = next[i];
    result.comfort.push_back({v.accel, v.jerk});
  }

  // Each vehicle takes part in at most one event per step: vehicle
  // collisions first, then road collisions, then exits.
  const std::size_t step_no = world.step_index + 1;
  std::vector<bool> consumed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (consumed[i] || consumed[j]) continue;
      if (vehicles_collide(world.vehicles[i].state, world.vehicles[j].state)) {
        result.events.push_back({EventKind::kVehicleCollision, step_no, {i, j}, 2});
        consumed[i] = consumed[j] = true;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!consumed[i] && hits_road(world.vehicles[i].state, world.route_of(i))) {
      result.events.push_back({EventKind::kRoadCollision, step_no, {i, i}, 1});
      consumed[i] = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!consumed[i] && reached_exit(world.vehicles[i].state, world.route_of(i))) {
      result.events.push_back({EventKind::kExit, step_no, {i, i}, 1});
      consumed[i] = true;
    }
  }

  std::unique_ptr<bool[]> placed(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) placed[i] = !consumed[i];
  for (std::size_t i = 0; i < n; ++i) {
    if (!consumed[i]) continue;
    world.vehicles[i] = spawn_vehicle(world, {placed.get(), n});
    placed[i] = true;
  }

  world.event_log.insert(world.event_log.end(), result.events.begin(), result.events.end());
  world.step_index = step_no;
  result.respawned = std::move(consumed);
  return result;
}

Observation IntersectionEnv::observe(const WorldState& world, AgentId agent) const {
  const std::size_t n = world.num_agents();
  if (agent >= n) throw std::out_of_range("observe: unknown agent");
  const auto& ego = world.vehicles[agent].state;
  const auto& path = world.route_of(agent).path;
  const Point2 p{ego.x, ego.y};
  const double c = std::cos(ego.theta);
  const double s = std::sin(ego.theta);
  auto to_ego = [&](const Point2& q) {
    const Point2 d = q - p;
    return Point2{c * d.x + s * d.y, -s * d.x + c * d.y};
  };

  Observation obs;
  obs.reserve(observation_size());
  const auto proj = project_onto_path(path, p);
  obs.push_back(ego.v);
  obs.push_back(ego.delta);
  obs.push_back(wrap_angle(ego.theta - path.heading_at(proj.arclength)));

  const double spacing = world.params.v_max * world.dt * config_.reward.lookahead_steps;
  for (const auto& q : sample_reference_points(path, p, config_.reward.num_reference_points(), spacing)) {
    const Point2 e = to_ego(q);
    obs.push_back(e.x);
    obs.push_back(e.y);
  }

  std::vector<AgentId> others;
  others.reserve(n - 1);
  for (AgentId j = 0; j < n; ++j)
    if (j != agent) others.push_back(j);
  std::vector<double> dist(n, 0.0);
  for (AgentId j : others) dist[j] = distance(p, {world.vehicles[j].state.x, world.vehicles[j].state.y});
  std::stable_sort(others.begin(), others.end(), [&](AgentId a, AgentId b) { return dist[a] < dist[b]; });
  for (AgentId j : others) {
    const auto& o = world.vehicles[j].state;
    const Point2 e = to_ego({o.x, o.y});
    obs.push_back(e.x);
    obs.push_back(e.y);
    obs.push_back(wrap_angle(o.theta - ego.theta));
    obs.push_back(o.v);
  }
  return obs;
}

ComfortSignals IntersectionEnv::comfort_signals(const WorldState& world, AgentId agent) const {
  const auto& v = world.vehicles.at(agent);
  return {v.accel, v.jerk};
}

}  // namespace cbfmarl

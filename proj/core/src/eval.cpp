#include "cbfmarl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cbfmarl/errors.hpp"
#include "cbfmarl/safety_filter.hpp"

namespace cbfmarl {

void EvalConfig::validate() const {
  if (!(t_eval > 0.0)) throw ConfigError("eval: t_eval must be positive");
  if (!(w_comf >= 0.0)) throw ConfigError("eval: w_comf must be non-negative");
  if (!(a_norm > 0.0 && j_norm > 0.0)) throw ConfigError("eval: normalizers must be positive");
  if (seeds.empty()) throw ConfigError("eval: need at least one seed");
  if (!(activation_epsilon >= 0.0)) throw ConfigError("eval: activation_epsilon must be non-negative");
}

std::size_t EvalConfig::steps(double dt) const {
  return static_cast<std::size_t>(std::floor(t_eval / dt + 1e-9));
}

TotalReward total_reward(const Trace& trace, const EvalConfig& config) {
  const std::size_t k_eval = config.steps(trace.dt);
  if (trace.steps.size() != k_eval)
    throw std::invalid_argument("total_reward: trace has " + std::to_string(trace.steps.size()) + " steps, expected " +
                                std::to_string(k_eval));
  if (trace.num_agents == 0) throw std::invalid_argument("total_reward: trace has no agents");
  TotalReward r;
  double comfort = 0.0;
  for (const auto& step : trace.steps) {
    for (const auto& e : step.events) {
      if (e.kind == EventKind::kExit) {
        ++r.exits;
      } else {
        ++r.collision_events;
        r.collided_vehicles += e.agent_count;
      }
    }
    for (const auto& v : step.vehicles) {
      const double a = v.accel / config.a_norm;
      const double j = v.jerk / config.j_norm;
      comfort += a * a + j * j;
    }
  }
  r.comfort_penalty = config.w_comf * comfort / (static_cast<double>(trace.num_agents) * static_cast<double>(k_eval));
  r.value = static_cast<double>(r.exits) - static_cast<double>(r.collision_events) - r.comfort_penalty;
  r.value_per_vehicle = static_cast<double>(r.exits) - static_cast<double>(r.collided_vehicles) - r.comfort_penalty;
  return r;
}

PolicyController::PolicyController(marl::PolicyParams params, bool deterministic)
    : params_(std::move(params)), deterministic_(deterministic) {}

void PolicyController::reset(std::uint64_t seed) { rng_.seed(seed); }

std::vector<ControlInput> PolicyController::act(const IntersectionEnv& env, const WorldState& world) {
  std::vector<ControlInput> u(world.num_agents());
  for (AgentId i = 0; i < u.size(); ++i) {
    const Observation obs = env.observe(world, i);
    u[i] = deterministic_ ? marl::deterministic_action(params_, obs) : marl::sample_action(params_, obs, rng_).u;
  }
  return u;
}

std::vector<ControlInput> ConstantController::act(const IntersectionEnv&, const WorldState& world) {
  return std::vector<ControlInput>(world.num_agents(), u_);
}

PathFollowingController::PathFollowingController(double target_speed, double lookahead)
    : target_speed_(target_speed), lookahead_(lookahead) {}

std::vector<ControlInput> PathFollowingController::act(const IntersectionEnv&, const WorldState& world) {
  const VehicleParams& p = world.params;
  std::vector<ControlInput> u(world.num_agents());
  for (AgentId i = 0; i < u.size(); ++i) {
    const VehicleState& s = world.vehicles[i].state;
    const ReferencePath& path = world.route_of(i).path;
    // Pursue from the rear axle, which the bicycle geometry turns about.
    const Point2 rear{s.x - p.rear_wheelbase * std::cos(s.theta), s.y - p.rear_wheelbase * std::sin(s.theta)};
    const auto proj = project_onto_path(path, {s.x, s.y});
    const Point2 target = path.point_at(proj.arclength + lookahead_);
    const Point2 d = target - rear;
    const double alpha = wrap_angle(std::atan2(d.y, d.x) - s.theta);
    const double ld = std::max(norm(d), 1e-6);
    const double delta_des = std::clamp(std::atan(2.0 * p.wheelbase * std::sin(alpha) / ld), -p.delta_max, p.delta_max);
    u[i] = p.clamp({4.0 * (target_speed_ - s.v), (delta_des - s.delta) / world.dt});
  }
  return u;
}

Trace rollout(const IntersectionEnv& env, WorldState& world, Controller& controller, std::size_t steps, bool filter) {
  const std::size_t n = world.num_agents();
  Trace trace;
  trace.num_agents = n;
  trace.dt = world.dt;
  trace.body_length = world.params.body_length;
  trace.body_width = world.params.body_width;
  trace.method = std::string(to_string(env.config().reward.method));
  trace.steps.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    std::vector<ControlInput> actions = controller.act(env, world);
    for (auto& a : actions) a = world.params.clamp(a);
    TraceStep rec;
    rec.k = world.step_index;
    rec.vehicles.resize(n);
    for (AgentId i = 0; i < n; ++i) {
      rec.vehicles[i].state = world.vehicles[i].state;
      rec.vehicles[i].route = world.vehicles[i].route;
      rec.vehicles[i].action = actions[i];
    }
    if (filter) {
      const auto evals = all_evaluations(world);
      for (AgentId i = 0; i < n; ++i) {
        const AgentQp qp = assemble_agent_qp(evals[i], actions, i, world.params, env.config().cbf);
        const FilterResult f = solve_box_qp(actions[i], qp.constraints, qp.box);
        auto& v = rec.vehicles[i];
        v.has_filter = true;
        v.filtered = f.u_filtered;
        v.correction = f.correction;
        v.normalized_correction = f.normalized_correction;
        v.feasible = f.feasible;
      }
    }
    const StepResult res = env.step(world, actions);
    for (AgentId i = 0; i < n; ++i) {
      auto& v = rec.vehicles[i];
      v.accel = res.comfort[i].accel;
      v.jerk = res.comfort[i].jerk;
      v.reward = res.rewards[i].total;
      if (!std::isfinite(v.reward) || !std::isfinite(world.vehicles[i].state.x))
        throw NumericalError("rollout: non-finite value at step " + std::to_string(rec.k) + " for agent " +
                             std::to_string(i));
    }
    rec.events = res.events;
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

EpisodeMetrics episode_metrics(const Trace& trace, const EvalConfig& config) {
  EpisodeMetrics m;
  m.seed = trace.seed;
  m.total = total_reward(trace, config);
  double reward = 0.0;
  double correction = 0.0;
  std::size_t samples = 0;
  std::size_t active = 0;
  for (const auto& s : trace.steps) {
    for (const auto& e : s.events) {
      if (e.kind == EventKind::kRoadCollision) ++m.road_collisions;
      if (e.kind == EventKind::kVehicleCollision) ++m.vehicle_collisions;
    }
    for (const auto& v : s.vehicles) {
      reward += v.reward;
      ++samples;
      if (!v.has_filter) continue;
      correction += v.correction;
      if (v.normalized_correction > config.activation_epsilon) ++active;
      if (!v.feasible) ++m.infeasible_filters;
    }
  }
  if (samples > 0) {
    m.mean_step_reward = reward / static_cast<double>(samples);
    m.activation_degree = static_cast<double>(active) / static_cast<double>(samples);
    m.mean_correction = correction / static_cast<double>(samples);
  }
  return m;
}

double EvalResult::mean_total() const {
  if (per_seed.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : per_seed) s += m.total.value;
  return s / static_cast<double>(per_seed.size());
}

double EvalResult::activation_degree(double epsilon) const {
  std::vector<FilterResult> all;
  for (const auto& t : traces)
    for (const auto& s : t.steps)
      for (const auto& v : s.vehicles) {
        if (!v.has_filter) continue;
        FilterResult f;
        f.correction = v.correction;
        f.normalized_correction = v.normalized_correction;
        all.push_back(f);
      }
  return all.empty() ? 0.0 : cbfmarl::activation_degree(all, epsilon);
}

double EvalResult::mean_correction() const {
  if (per_seed.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : per_seed) s += m.mean_correction;
  return s / static_cast<double>(per_seed.size());
}

EvalResult evaluate_policy(Controller& controller, const IntersectionEnv& env, const EvalConfig& config) {
  config.validate();
  const std::size_t steps = config.steps(env.config().dt);
  EvalResult result;
  for (std::uint64_t seed : config.seeds) {
    WorldState world = env.reset(seed);
    controller.reset(seed);
    Trace trace = rollout(env, world, controller, steps, config.filter_diagnostics);
    trace.seed = seed;
    result.per_seed.push_back(episode_metrics(trace, config));
    result.traces.push_back(std::move(trace));
  }
  return result;
}

void check_compatible(const marl::PolicyParams& params, const IntersectionEnv& env) {
  if (params.obs_dim != env.observation_size() || params.num_agents != env.config().num_agents)
    throw ConfigError("policy expects " + std::to_string(params.num_agents) + " agents with observation size " +
                      std::to_string(params.obs_dim) + ", environment has " +
                      std::to_string(env.config().num_agents) + " agents with observation size " +
                      std::to_string(env.observation_size()));
}

}  // namespace cbfmarl

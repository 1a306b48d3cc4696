#include "cbfmarl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cbfmarl {

std::string_view to_string(RewardMethod m) {
  switch (m) {
    case RewardMethod::kCbf: return "cbf";
    case RewardMethod::kDistance: return "distance";
    case RewardMethod::kTtc: return "ttc";
  }
  return "?";
}

RewardMethod parse_reward_method(std::string_view s) {
  if (s == "cbf") return RewardMethod::kCbf;
  if (s == "distance") return RewardMethod::kDistance;
  if (s == "ttc") return RewardMethod::kTtc;
  throw std::invalid_argument("unknown reward method '" + std::string(s) + "'");
}

void RewardConfig::validate() const {
  if (!(psi_th > 0.0 && d_road_th > 0.0 && d_veh_th > 0.0 && t_ttc_th > 0.0))
    throw std::invalid_argument("reward: thresholds must be positive");
  if (weights.empty()) throw std::invalid_argument("reward: need at least one reference-point weight");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("reward: weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("reward: weights must sum to 1");
  if (!(w_prog >= 0.0)) throw std::invalid_argument("reward: w_prog must be non-negative");
  if (!(lookahead_steps > 0.0)) throw std::invalid_argument("reward: lookahead_steps must be positive");
}

double clip_rho(double psi, double psi_th) {
  if (!(psi_th > 0.0)) throw std::invalid_argument("clip_rho: psi_th must be positive");
  return -std::min(std::max(-psi / psi_th, 0.0), 1.0);
}

double clip_rho_prime(double z) { return -std::min(std::max(z, 0.0), 1.0); }

double cbf_reward(AgentId agent, std::span<const ConstraintValue> constraints, std::size_t num_agents,
                  const RewardConfig& config, std::vector<std::pair<ConstraintSource, double>>* per_source) {
  double left = 0.0;
  double right = 0.0;
  bool has_left = false;
  bool has_right = false;
  double veh_sum = 0.0;
  std::vector<bool> seen(num_agents, false);
  std::size_t pairs = 0;
  for (const auto& c : constraints) {
    if (c.source.agent != agent) continue;
    const double r = clip_rho(c.psi, config.psi_th);
    if (per_source) per_source->emplace_back(c.source, r);
    switch (c.source.kind) {
      case ConstraintKind::kRoadLeft:
        left = r;
        has_left = true;
        break;
      case ConstraintKind::kRoadRight:
        right = r;
        has_right = true;
        break;
      case ConstraintKind::kVehicle:
        if (c.source.other >= num_agents || c.source.other == agent || seen[c.source.other])
          throw std::invalid_argument("cbf_reward: unexpected pair constraint");
        seen[c.source.other] = true;
        veh_sum += r;
        ++pairs;
        break;
    }
  }
  if (!has_left || !has_right) throw std::invalid_argument("cbf_reward: missing road constraint");
  if (num_agents > 0 && pairs != num_agents - 1) throw std::invalid_argument("cbf_reward: missing pair constraint");
  const double veh = pairs == 0 ? 0.0 : veh_sum / static_cast<double>(pairs);
  return (veh + left + right) / 3.0;
}

double progress_reward(const Point2& p_prev, const Point2& p_now, std::span<const Point2> ref_points,
                       std::span<const double> weights, double w_prog, double v_max, double dt) {
  if (ref_points.size() != weights.size()) throw std::invalid_argument("progress_reward: weight count mismatch");
  const Point2 delta = p_now - p_prev;
  double sum = 0.0;
  for (std::size_t m = 0; m < ref_points.size(); ++m) {
    const Point2 d = ref_points[m] - p_prev;
    const double len = norm(d);
    if (len <= 1e-9) continue;
    sum += weights[m] * dot(delta, d) / len;
  }
  return w_prog * sum / (v_max * dt);
}

namespace {

double road_term(double d, double threshold) { return clip_rho_prime((threshold - d) / threshold); }

double mean_or_zero(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

}  // namespace

double distance_baseline_reward(double d_road_left, double d_road_right, std::span<const double> d_veh,
                                const RewardConfig& config) {
  if (d_road_left < 0.0 || d_road_right < 0.0) throw std::invalid_argument("distance reward: negative road distance");
  double veh = 0.0;
  for (double d : d_veh) {
    if (d < 0.0) throw std::invalid_argument("distance reward: negative vehicle distance");
    veh += clip_rho_prime((config.d_veh_th - d) / config.d_veh_th);
  }
  return (road_term(d_road_left, config.d_road_th) + road_term(d_road_right, config.d_road_th) +
          mean_or_zero(veh, d_veh.size())) /
         3.0;
}

double time_to_collision(const VehicleState& si, const VehicleState& sj, const CircleDecomposition& decomp,
                         const VehicleParams& params) {
  const auto ci = circle_centers(si, decomp);
  const auto cj = circle_centers(sj, decomp);
  const double bi = slip_angle(si.delta, params);
  const double bj = slip_angle(sj.delta, params);
  const Point2 vi{si.v * std::cos(si.theta + bi), si.v * std::sin(si.theta + bi)};
  const Point2 vj{sj.v * std::cos(sj.theta + bj), sj.v * std::sin(sj.theta + bj)};
  const Point2 dv = vi - vj;
  const double reach = 2.0 * decomp.radius;
  const double a = dot(dv, dv);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& pa : ci) {
    for (const auto& pb : cj) {
      const Point2 dc = pa - pb;
      const double c = dot(dc, dc) - reach * reach;
      if (c <= 0.0) return 0.0;
      if (a == 0.0) continue;
      const double b = dot(dc, dv);
      const double disc = b * b - a * c;
      if (disc < 0.0) continue;
      // c > 0, so both roots share a sign; the earlier root is the contact.
      const double t = (-b - std::sqrt(disc)) / a;
      if (t >= 0.0) best = std::min(best, t);
    }
  }
  return best;
}

double ttc_baseline_reward(double d_road_left, double d_road_right, std::span<const double> ttcs,
                           const RewardConfig& config) {
  if (d_road_left < 0.0 || d_road_right < 0.0) throw std::invalid_argument("ttc reward: negative road distance");
  double veh = 0.0;
  for (double t : ttcs) {
    if (std::isinf(t)) continue;
    veh += clip_rho_prime((config.t_ttc_th - t) / config.t_ttc_th);
  }
  return (road_term(d_road_left, config.d_road_th) + road_term(d_road_right, config.d_road_th) +
          mean_or_zero(veh, ttcs.size())) /
         3.0;
}

double road_distance(const VehicleState& state, RoadSide side, const Route& corridor,
                     const CircleDecomposition& decomp) {
  const Polyline& line = side == RoadSide::kLeft ? corridor.left : corridor.right;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : circle_centers(state, decomp)) best = std::min(best, pseudo_distance(c, line).distance);
  return best - decomp.radius;
}

double vehicle_distance(const VehicleState& a, const VehicleState& b, const CircleDecomposition& decomp) {
  const auto ca = circle_centers(a, decomp);
  const auto cb = circle_centers(b, decomp);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : ca)
    for (const auto& q : cb) best = std::min(best, distance(p, q));
  return best - 2.0 * decomp.radius;
}

namespace {

double progress_for(AgentId i, const WorldState& pre, const Point2& next, const RewardConfig& config) {
  const Point2 prev{pre.vehicles[i].state.x, pre.vehicles[i].state.y};
  const double spacing = pre.params.v_max * pre.dt * config.lookahead_steps;
  const auto refs = sample_reference_points(pre.route_of(i).path, prev, config.num_reference_points(), spacing);
  return progress_reward(prev, next, refs, config.weights, config.w_prog, pre.params.v_max, pre.dt);
}

double baseline_safety(AgentId i, const WorldState& pre, const RewardConfig& config,
                       std::vector<std::pair<ConstraintSource, double>>& per_source) {
  const auto& s = pre.vehicles[i].state;
  const auto& route = pre.route_of(i);
  // Circles may poke through the boundary before the rectangle does.
  const double dl = std::max(0.0, road_distance(s, RoadSide::kLeft, route, pre.decomp));
  const double dr = std::max(0.0, road_distance(s, RoadSide::kRight, route, pre.decomp));
  per_source.emplace_back(ConstraintSource{ConstraintKind::kRoadLeft, i, i}, road_term(dl, config.d_road_th));
  per_source.emplace_back(ConstraintSource{ConstraintKind::kRoadRight, i, i}, road_term(dr, config.d_road_th));
  std::vector<double> values;
  values.reserve(pre.num_agents());
  for (AgentId j = 0; j < pre.num_agents(); ++j) {
    if (j == i) continue;
    const auto& o = pre.vehicles[j].state;
    double v = 0.0;
    double penalty = 0.0;
    if (config.method == RewardMethod::kDistance) {
      v = std::max(0.0, vehicle_distance(s, o, pre.decomp));
      penalty = clip_rho_prime((config.d_veh_th - v) / config.d_veh_th);
    } else {
      v = time_to_collision(s, o, pre.decomp, pre.params);
      penalty = std::isinf(v) ? 0.0 : clip_rho_prime((config.t_ttc_th - v) / config.t_ttc_th);
    }
    values.push_back(v);
    per_source.emplace_back(ConstraintSource{ConstraintKind::kVehicle, i, j}, penalty);
  }
  return config.method == RewardMethod::kDistance ? distance_baseline_reward(dl, dr, values, config)
                                                  : ttc_baseline_reward(dl, dr, values, config);
}

}  // namespace

std::vector<RewardBreakdown> compute_rewards(const WorldState& pre, std::span<const Point2> next_positions,
                                             std::span<const ControlInput> joint_inputs, const RewardConfig& config,
                                             const CbfConfig& cbf_config) {
  const std::size_t n = pre.num_agents();
  if (next_positions.size() != n || joint_inputs.size() != n)
    throw std::invalid_argument("compute_rewards: expected one position and one input per agent");
  std::vector<RewardBreakdown> out(n);
  std::vector<std::vector<ConstraintValue>> constraints;
  if (config.method == RewardMethod::kCbf) constraints = all_constraints(pre, joint_inputs, cbf_config);
  for (AgentId i = 0; i < n; ++i) {
    auto& r = out[i];
    r.safety = config.method == RewardMethod::kCbf ? cbf_reward(i, constraints[i], n, config, &r.per_source)
                                                   : baseline_safety(i, pre, config, r.per_source);
    r.progress = progress_for(i, pre, next_positions[i], config);
    r.total = r.safety + r.progress;
  }
  return out;
}

RewardBreakdown step_reward(AgentId agent, const WorldState& pre, const Point2& next_position,
                            std::span<const ControlInput> joint_inputs, const RewardConfig& config,
                            const CbfConfig& cbf_config) {
  RewardBreakdown r;
  if (config.method == RewardMethod::kCbf) {
    std::vector<ConstraintValue> mine;
    const auto evals = all_evaluations(pre);
    for (const auto& e : evals[agent]) mine.push_back(evaluate_constraint(e, joint_inputs, cbf_config));
    r.safety = cbf_reward(agent, mine, pre.num_agents(), config, &r.per_source);
  } else {
    r.safety = baseline_safety(agent, pre, config, r.per_source);
  }
  r.progress = progress_for(agent, pre, next_position, config);
  r.total = r.safety + r.progress;
  return r;
}

}  // namespace cbfmarl

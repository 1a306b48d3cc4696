#include "cbfmarl/safety_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbfmarl {

AgentQp assemble_agent_qp(std::span<const CbfEvaluation> agent_evals, std::span<const ControlInput> joint_rl_actions,
                          AgentId agent, const VehicleParams& params, const CbfConfig& config) {
  AgentQp qp;
  qp.box = {{params.accel_min, params.steering_rate_min}, {params.accel_max, params.steering_rate_max}};
  qp.constraints.reserve(agent_evals.size());
  const double half_dt2 = 0.5 * config.dt * config.dt;
  for (const auto& e : agent_evals) {
    // psi(u_agent) = psi(0 for this agent, RL actions for the others) + half_dt2 * coeffs . u_agent
    HalfPlane hp;
    double h_ddot_rest = e.h_ddot_const;
    for (const auto& t : e.terms()) {
      if (t.agent == agent) {
        hp.a = {half_dt2 * t.input_coeffs[0], half_dt2 * t.input_coeffs[1]};
      } else {
        if (t.agent >= joint_rl_actions.size()) throw std::out_of_range("assemble_agent_qp: missing input");
        const auto& u = joint_rl_actions[t.agent];
        h_ddot_rest += t.input_coeffs[0] * u.accel + t.input_coeffs[1] * u.steering_rate;
      }
    }
    const double psi0 = config.dt * e.h_dot + half_dt2 * h_ddot_rest + config.gamma * e.h + config.remainder_term();
    hp.b = -psi0;
    hp.source = e.source;
    hp.source.agent = agent;
    qp.constraints.push_back(hp);
  }
  return qp;
}

AgentQp assemble_agent_qp(const WorldState& world, std::span<const ControlInput> joint_rl_actions, AgentId agent,
                          const CbfConfig& config) {
  const auto evals = all_evaluations(world);
  return assemble_agent_qp(evals.at(agent), joint_rl_actions, agent, world.params, config);
}

namespace {

constexpr double kFeasTol = 1e-10;

struct Line {
  double a0, a1, b;  // a . u >= b
};

double slack(const Line& l, double x, double y) { return l.a0 * x + l.a1 * y - l.b; }

double normalized_norm(const ControlInput& d, const InputBox& box) {
  const double sa = 0.5 * (box.upper.accel - box.lower.accel);
  const double sd = 0.5 * (box.upper.steering_rate - box.lower.steering_rate);
  return std::hypot(d.accel / sa, d.steering_rate / sd);
}

// Minimizes the worst normalized violation over the box by successive grid
// refinement.
ControlInput least_violating(const std::vector<Line>& lines, const InputBox& box) {
  auto worst = [&](double x, double y) {
    double w = -std::numeric_limits<double>::infinity();
    for (const auto& l : lines) w = std::max(w, -slack(l, x, y) / std::hypot(l.a0, l.a1));
    return w;
  };
  double cx = 0.5 * (box.lower.accel + box.upper.accel);
  double cy = 0.5 * (box.lower.steering_rate + box.upper.steering_rate);
  double hx = 0.5 * (box.upper.accel - box.lower.accel);
  double hy = 0.5 * (box.upper.steering_rate - box.lower.steering_rate);
  constexpr int kGrid = 20;
  for (int iter = 0; iter < 40; ++iter) {
    double best = std::numeric_limits<double>::infinity();
    double bx = cx;
    double by = cy;
    for (int i = -kGrid; i <= kGrid; ++i) {
      for (int j = -kGrid; j <= kGrid; ++j) {
        const double x = std::clamp(cx + hx * i / kGrid, box.lower.accel, box.upper.accel);
        const double y = std::clamp(cy + hy * j / kGrid, box.lower.steering_rate, box.upper.steering_rate);
        const double w = worst(x, y);
        if (w < best) {
          best = w;
          bx = x;
          by = y;
        }
      }
    }
    cx = bx;
    cy = by;
    hx *= 0.5;
    hy *= 0.5;
  }
  return {cx, cy};
}

}  // namespace

FilterResult solve_box_qp(const ControlInput& u_rl, std::span<const HalfPlane> constraints, const InputBox& box) {
  FilterResult out;
  out.u_rl = u_rl;

  std::vector<Line> lines;
  lines.reserve(constraints.size() + 4);
  bool trivially_infeasible = false;
  std::vector<std::size_t> line_source;  // index into constraints, or npos for box edges
  constexpr std::size_t kBox = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const auto& c = constraints[k];
    const double an = std::hypot(c.a[0], c.a[1]);
    if (an <= 1e-14) {
      if (c.b > kFeasTol) trivially_infeasible = true;
      continue;
    }
    lines.push_back({c.a[0], c.a[1], c.b});
    line_source.push_back(k);
  }
  lines.push_back({1.0, 0.0, box.lower.accel});
  lines.push_back({-1.0, 0.0, -box.upper.accel});
  lines.push_back({0.0, 1.0, box.lower.steering_rate});
  lines.push_back({0.0, -1.0, -box.upper.steering_rate});
  for (int k = 0; k < 4; ++k) line_source.push_back(kBox);

  auto feasible = [&](double x, double y) {
    for (const auto& l : lines) {
      const double scale = 1.0 + std::abs(l.b);
      if (slack(l, x, y) < -kFeasTol * scale) return false;
    }
    return true;
  };

  double best = std::numeric_limits<double>::infinity();
  ControlInput best_u = u_rl;
  auto consider = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y) || !feasible(x, y)) return;
    const double d = std::hypot(x - u_rl.accel, y - u_rl.steering_rate);
    if (d < best) {
      best = d;
      best_u = {x, y};
    }
  };

  if (!trivially_infeasible) {
    consider(u_rl.accel, u_rl.steering_rate);
    if (best > 0.0) {
      for (const auto& l : lines) {
        const double t = (l.b - l.a0 * u_rl.accel - l.a1 * u_rl.steering_rate) / (l.a0 * l.a0 + l.a1 * l.a1);
        consider(u_rl.accel + t * l.a0, u_rl.steering_rate + t * l.a1);
      }
      for (std::size_t p = 0; p < lines.size(); ++p) {
        for (std::size_t q = p + 1; q < lines.size(); ++q) {
          const Line& l1 = lines[p];
          const Line& l2 = lines[q];
          const double det = l1.a0 * l2.a1 - l1.a1 * l2.a0;
          if (std::abs(det) < 1e-14 * std::hypot(l1.a0, l1.a1) * std::hypot(l2.a0, l2.a1)) continue;
          consider((l1.b * l2.a1 - l1.a1 * l2.b) / det, (l1.a0 * l2.b - l1.b * l2.a0) / det);
        }
      }
    }
  }

  if (std::isfinite(best)) {
    out.feasible = true;
    out.u_filtered = best_u;
  } else {
    out.feasible = false;
    out.u_filtered = least_violating(lines, box);
  }
  const ControlInput d{out.u_filtered.accel - u_rl.accel, out.u_filtered.steering_rate - u_rl.steering_rate};
  out.correction = std::hypot(d.accel, d.steering_rate);
  out.normalized_correction = normalized_norm(d, box);
  if (out.correction > 0.0) {
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (line_source[k] == kBox) continue;
      const double s = slack(lines[k], out.u_filtered.accel, out.u_filtered.steering_rate);
      if (std::abs(s) <= 1e-9 * (1.0 + std::abs(lines[k].b)) || s < 0.0)
        out.active_constraints.push_back(constraints[line_source[k]].source);
    }
  }
  return out;
}

double activation_degree(std::span<const FilterResult> trajectory, double epsilon) {
  if (trajectory.empty()) throw std::invalid_argument("activation_degree: empty trajectory");
  const auto active = std::count_if(trajectory.begin(), trajectory.end(),
                                    [epsilon](const FilterResult& r) { return r.normalized_correction > epsilon; });
  return static_cast<double>(active) / static_cast<double>(trajectory.size());
}

}  // namespace cbfmarl

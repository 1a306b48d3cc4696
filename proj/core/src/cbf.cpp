#include "cbfmarl/cbf.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbfmarl {

void CbfConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("cbf: dt must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("cbf: gamma must be positive");
  if (!std::isfinite(remainder)) throw std::invalid_argument("cbf: remainder must be finite");
}

namespace {

using Vec2 = Eigen::Vector2d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat25 = Eigen::Matrix<double, 2, 5>;

// Position, velocity and their state Jacobians for one circle center
// c = p + o (cos theta, sin theta) under the bicycle drift.
struct CircleMotion {
  Vec2 c;
  Vec2 c_dot;
  Mat25 jac_c;
  Mat25 jac_c_dot;
  Vec5 drift;
};

CircleMotion circle_motion(const VehicleState& s, double offset, const VehicleParams& p) {
  const double k = p.rear_wheelbase / p.wheelbase;
  const double tan_d = std::tan(s.delta);
  const double beta = std::atan(k * tan_d);
  const double cos_b = std::cos(beta);
  const double sin_b = std::sin(beta);
  const double sec2_d = 1.0 + tan_d * tan_d;
  const double dbeta = k * sec2_d / (1.0 + k * k * tan_d * tan_d);

  // yaw rate omega = v / l_wb * tan(delta) * cos(beta)
  const double omega_per_v = tan_d * cos_b / p.wheelbase;
  const double omega = s.v * omega_per_v;
  const double domega_ddelta = s.v / p.wheelbase * (sec2_d * cos_b - tan_d * sin_b * dbeta);

  const double ct = std::cos(s.theta);
  const double st = std::sin(s.theta);
  const double ctb = std::cos(s.theta + beta);
  const double stb = std::sin(s.theta + beta);

  CircleMotion m;
  m.c = Vec2(s.x + offset * ct, s.y + offset * st);
  m.c_dot = Vec2(s.v * ctb - offset * st * omega, s.v * stb + offset * ct * omega);

  m.jac_c.setZero();
  m.jac_c(0, 0) = 1.0;
  m.jac_c(1, 1) = 1.0;
  m.jac_c(0, 2) = -offset * st;
  m.jac_c(1, 2) = offset * ct;

  m.jac_c_dot.setZero();
  m.jac_c_dot(0, 2) = -s.v * stb - offset * ct * omega;
  m.jac_c_dot(1, 2) = s.v * ctb - offset * st * omega;
  m.jac_c_dot(0, 3) = ctb - offset * st * omega_per_v;
  m.jac_c_dot(1, 3) = stb + offset * ct * omega_per_v;
  m.jac_c_dot(0, 4) = -s.v * stb * dbeta - offset * st * domega_ddelta;
  m.jac_c_dot(1, 4) = s.v * ctb * dbeta + offset * ct * domega_ddelta;

  m.drift << s.v * ctb, s.v * stb, omega, 0.0, 0.0;
  return m;
}

StateGradient to_array(const Vec5& v) { return {v(0), v(1), v(2), v(3), v(4)}; }

}  // namespace

CbfEvaluation road_cbf(AgentId agent, const VehicleState& state, RoadSide side, const Route& corridor,
                       const CircleDecomposition& decomp, const VehicleParams& params) {
  const Polyline& line = side == RoadSide::kLeft ? corridor.left : corridor.right;
  const auto centers = circle_centers(state, decomp);

  std::size_t best_circle = 0;
  PseudoDistance best;
  double best_h = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const PseudoDistance d = pseudo_distance(centers[j], line);
    const double h = d.distance - decomp.radius;
    if (h < best_h) {
      best_h = h;
      best = d;
      best_circle = j;
    }
  }

  const CircleMotion m = circle_motion(state, decomp.offsets[best_circle], params);
  Vec2 grad;
  Mat2 hess = Mat2::Zero();
  if (!best.at_vertex) {
    const Point2 n = line.corridor_normal(best.segment);
    grad = Vec2(n.x, n.y);
  } else {
    const Vec2 rel = m.c - Vec2(best.closest.x, best.closest.y);
    const double dist = rel.norm();
    const double sign = best.distance < 0.0 ? -1.0 : 1.0;
    if (dist > 0.0) {
      const Vec2 u = rel / dist;
      grad = sign * u;
      hess = sign * (Mat2::Identity() - u * u.transpose()) / dist;
    } else {
      const Point2 n = line.corridor_normal(best.segment);
      grad = Vec2(n.x, n.y);
    }
  }

  const Vec5 grad_h = m.jac_c.transpose() * grad;
  const Vec5 grad_h_dot = m.jac_c.transpose() * (hess * m.c_dot) + m.jac_c_dot.transpose() * grad;

  CbfEvaluation out;
  out.h = best_h;
  out.h_dot = grad.dot(m.c_dot);
  out.h_ddot_const = grad_h_dot.dot(m.drift);
  out.involved_count = 1;
  out.involved[0] = {agent, to_array(grad_h), to_array(grad_h_dot), {grad_h_dot(3), grad_h_dot(4)}};
  out.source = {side == RoadSide::kLeft ? ConstraintKind::kRoadLeft : ConstraintKind::kRoadRight, agent, agent};
  out.circle_a = best_circle;
  out.segment = best.segment;
  return out;
}

CbfEvaluation vehicle_pair_cbf(AgentId i, const VehicleState& state_i, AgentId j, const VehicleState& state_j,
                               const CircleDecomposition& decomp, const VehicleParams& params) {
  if (i == j) throw std::invalid_argument("vehicle_pair_cbf: a vehicle cannot pair with itself");
  const auto ci = circle_centers(state_i, decomp);
  const auto cj = circle_centers(state_j, decomp);

  std::size_t best_a = 0;
  std::size_t best_b = 0;
  double best_h = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ci.size(); ++a) {
    for (std::size_t b = 0; b < cj.size(); ++b) {
      const double h = distance(ci[a], cj[b]) - 2.0 * decomp.radius;
      if (h < best_h) {
        best_h = h;
        best_a = a;
        best_b = b;
      }
    }
  }

  const CircleMotion mi = circle_motion(state_i, decomp.offsets[best_a], params);
  const CircleMotion mj = circle_motion(state_j, decomp.offsets[best_b], params);
  const Vec2 d = mi.c - mj.c;
  const double dist = d.norm();
  Vec2 u(1.0, 0.0);
  Mat2 hess = Mat2::Zero();
  if (dist > 0.0) {
    u = d / dist;
    hess = (Mat2::Identity() - u * u.transpose()) / dist;
  }
  const Vec2 rel = mi.c_dot - mj.c_dot;

  const Vec5 grad_h_i = mi.jac_c.transpose() * u;
  const Vec5 grad_h_j = -(mj.jac_c.transpose() * u);
  const Vec5 grad_hd_i = mi.jac_c.transpose() * (hess * rel) + mi.jac_c_dot.transpose() * u;
  const Vec5 grad_hd_j = -(mj.jac_c.transpose() * (hess * rel)) - mj.jac_c_dot.transpose() * u;

  CbfEvaluation out;
  out.h = best_h;
  out.h_dot = u.dot(rel);
  out.h_ddot_const = grad_hd_i.dot(mi.drift) + grad_hd_j.dot(mj.drift);
  out.involved_count = 2;
  out.involved[0] = {i, to_array(grad_h_i), to_array(grad_hd_i), {grad_hd_i(3), grad_hd_i(4)}};
  out.involved[1] = {j, to_array(grad_h_j), to_array(grad_hd_j), {grad_hd_j(3), grad_hd_j(4)}};
  out.source = {ConstraintKind::kVehicle, i, j};
  out.circle_a = best_a;
  out.circle_b = best_b;
  return out;
}

double evaluate_psi(const CbfEvaluation& eval, std::span<const ControlInput> joint_inputs, const CbfConfig& config) {
  double h_ddot = eval.h_ddot_const;
  for (const auto& t : eval.terms()) {
    if (t.agent >= joint_inputs.size()) throw std::out_of_range("evaluate_psi: missing input for an involved vehicle");
    const ControlInput& u = joint_inputs[t.agent];
    h_ddot += t.input_coeffs[0] * u.accel + t.input_coeffs[1] * u.steering_rate;
  }
  const double dt = config.dt;
  return dt * eval.h_dot + 0.5 * dt * dt * h_ddot + config.gamma * eval.h + config.remainder_term();
}

ConstraintValue evaluate_constraint(const CbfEvaluation& eval, std::span<const ControlInput> joint_inputs,
                                    const CbfConfig& config) {
  return {evaluate_psi(eval, joint_inputs, config), eval.source};
}

std::vector<std::vector<CbfEvaluation>> all_evaluations(const WorldState& world) {
  const std::size_t n = world.num_agents();
  std::vector<std::vector<CbfEvaluation>> out(n);
  for (AgentId i = 0; i < n; ++i) {
    out[i].reserve(n + 1);
    const auto& s = world.vehicles[i].state;
    out[i].push_back(road_cbf(i, s, RoadSide::kLeft, world.route_of(i), world.decomp, world.params));
    out[i].push_back(road_cbf(i, s, RoadSide::kRight, world.route_of(i), world.decomp, world.params));
  }
  for (AgentId i = 0; i < n; ++i) {
    for (AgentId j = i + 1; j < n; ++j) {
      CbfEvaluation e = vehicle_pair_cbf(i, world.vehicles[i].state, j, world.vehicles[j].state, world.decomp,
                                         world.params);
      out[i].push_back(e);
      e.source = {ConstraintKind::kVehicle, j, i};
      out[j].push_back(e);
    }
  }
  return out;
}

std::vector<std::vector<ConstraintValue>> all_constraints(const WorldState& world,
                                                          std::span<const ControlInput> joint_inputs,
                                                          const CbfConfig& config) {
  const auto evals = all_evaluations(world);
  std::vector<std::vector<ConstraintValue>> out(evals.size());
  for (std::size_t i = 0; i < evals.size(); ++i) {
    out[i].reserve(evals[i].size());
    for (const auto& e : evals[i]) out[i].push_back(evaluate_constraint(e, joint_inputs, config));
  }
  return out;
}

}  // namespace cbfmarl

#include "cbfmarl/marl/policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cbfmarl::marl {

ActionScale ActionScale::from(const VehicleParams& p) {
  ActionScale s;
  s.center = {0.5 * (p.accel_max + p.accel_min), 0.5 * (p.steering_rate_max + p.steering_rate_min)};
  s.half_range = {0.5 * (p.accel_max - p.accel_min), 0.5 * (p.steering_rate_max - p.steering_rate_min)};
  return s;
}

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> obs) {
  return {obs.data(), static_cast<Eigen::Index>(obs.size())};
}

}  // namespace

PolicyParams make_policy(std::size_t obs_dim, std::size_t num_agents, const NetworkShape& shape,
                         const ActionScale& scale, std::mt19937_64& rng) {
  PolicyParams p;
  p.obs_dim = obs_dim;
  p.num_agents = num_agents;
  p.scale = scale;
  p.actor = Mlp(layer_sizes(static_cast<int>(obs_dim), shape.actor_hidden, 2));
  p.critic = Mlp(layer_sizes(static_cast<int>(obs_dim * num_agents), shape.critic_hidden, 1));
  p.actor.initialize(rng, 0.01);
  p.critic.initialize(rng, 1.0);
  p.log_std.setConstant(shape.init_log_std);
  return p;
}

PolicyOutput policy_forward(std::span<const double> obs, const PolicyParams& params) {
  if (obs.size() != params.obs_dim) throw std::invalid_argument("policy_forward: observation length mismatch");
  const Eigen::MatrixXd out = params.actor.forward(as_vector(obs));
  return {out.col(0), params.log_std};
}

ControlInput squash(const Eigen::Vector2d& z, const ActionScale& s) {
  return {s.center[0] + s.half_range[0] * std::tanh(z(0)), s.center[1] + s.half_range[1] * std::tanh(z(1))};
}

double log_prob(const Eigen::Vector2d& mean, const Eigen::Vector2d& log_std, const Eigen::Vector2d& z,
                const ActionScale& scale) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double lp = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double e = (z(k) - mean(k)) * std::exp(-log_std(k));
    // log(1 - tanh(z)^2) = 2 (log 2 - z - softplus(-2 z))
    const double log_jac = 2.0 * (std::numbers::ln2 - z(k) - std::log1p(std::exp(-2.0 * z(k))));
    lp += -0.5 * e * e - log_std(k) - kHalfLog2Pi - log_jac - std::log(scale.half_range[static_cast<std::size_t>(k)]);
  }
  return lp;
}

SampledAction sample_action(const PolicyParams& params, std::span<const double> obs, std::mt19937_64& rng) {
  const PolicyOutput out = policy_forward(obs, params);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction a;
  for (int k = 0; k < 2; ++k) a.z(k) = out.mean(k) + std::exp(out.log_std(k)) * normal(rng);
  a.u = squash(a.z, params.scale);
  a.log_prob = log_prob(out.mean, out.log_std, a.z, params.scale);
  return a;
}

ControlInput deterministic_action(const PolicyParams& params, std::span<const double> obs) {
  return squash(policy_forward(obs, params).mean, params.scale);
}

LogProbGradient log_prob_gradient(const PolicyParams& params, std::span<const double> obs, const Eigen::Vector2d& z) {
  if (obs.size() != params.obs_dim) throw std::invalid_argument("log_prob_gradient: observation length mismatch");
  Mlp::Cache cache;
  const Eigen::MatrixXd mean = params.actor.forward(as_vector(obs), &cache);
  const Eigen::Vector2d var = (2.0 * params.log_std).array().exp();
  const Eigen::Vector2d diff = z - mean.col(0);
  LogProbGradient g;
  g.actor = params.actor.backward(cache, (diff.array() / var.array()).matrix());
  g.log_std = (diff.array().square() / var.array() - 1.0).matrix();
  return g;
}

Eigen::VectorXd critic_input(std::span<const std::vector<double>> observations, std::size_t ego) {
  const std::size_t n = observations.size();
  if (n == 0 || ego >= n) throw std::invalid_argument("critic_input: ego agent out of range");
  const std::size_t dim = observations[0].size();
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim * n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& o = observations[(ego + k) % n];
    if (o.size() != dim) throw std::invalid_argument("critic_input: inconsistent observation lengths");
    x.segment(static_cast<Eigen::Index>(k * dim), static_cast<Eigen::Index>(dim)) = as_vector(o);
  }
  return x;
}

double value(const PolicyParams& params, const Eigen::VectorXd& critic_obs) {
  return params.critic.forward(critic_obs)(0, 0);
}

}  // namespace cbfmarl::marl

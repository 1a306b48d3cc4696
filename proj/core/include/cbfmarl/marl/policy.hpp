#pragma once

#include <Eigen/Dense>
#include <array>
#include <random>
#include <span>
#include <vector>

#include "cbfmarl/dynamics.hpp"
#include "cbfmarl/marl/mlp.hpp"

namespace cbfmarl::marl {

/// Affine map from the tanh range [-1, 1]^2 onto the input box.
struct ActionScale {
  std::array<double, 2> center{};
  std::array<double, 2> half_range{1.0, 1.0};

  static ActionScale from(const VehicleParams& params);
};

/// Shared decentralized actor (observation -> Gaussian mean, with a
/// state-independent log standard deviation) and centralized critic
/// (all observations, ego first -> value).
struct PolicyParams {
  Mlp actor;
  Eigen::Vector2d log_std = Eigen::Vector2d::Zero();
  Mlp critic;
  std::size_t obs_dim = 0;
  std::size_t num_agents = 0;
  ActionScale scale;

  std::size_t critic_dim() const { return obs_dim * num_agents; }
};

struct NetworkShape {
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double init_log_std = -0.5;
};

PolicyParams make_policy(std::size_t obs_dim, std::size_t num_agents, const NetworkShape& shape,
                         const ActionScale& scale, std::mt19937_64& rng);

struct PolicyOutput {
  Eigen::Vector2d mean;
  Eigen::Vector2d log_std;
};

/// Throws std::invalid_argument on an observation length mismatch.
PolicyOutput policy_forward(std::span<const double> obs, const PolicyParams& params);

ControlInput squash(const Eigen::Vector2d& z, const ActionScale& scale);

/// Log-density of the squashed action u = squash(z) when z ~ N(mean, std).
double log_prob(const Eigen::Vector2d& mean, const Eigen::Vector2d& log_std, const Eigen::Vector2d& z,
                const ActionScale& scale);

struct SampledAction {
  Eigen::Vector2d z;  ///< pre-squash Gaussian sample
  ControlInput u;
  double log_prob = 0.0;
};

SampledAction sample_action(const PolicyParams& params, std::span<const double> obs, std::mt19937_64& rng);
/// Squashed mean.
ControlInput deterministic_action(const PolicyParams& params, std::span<const double> obs);

struct LogProbGradient {
  Eigen::VectorXd actor;
  Eigen::Vector2d log_std;
};
/// d log_prob / d(actor weights, log_std) for one observation and sample.
LogProbGradient log_prob_gradient(const PolicyParams& params, std::span<const double> obs, const Eigen::Vector2d& z);

/// Concatenation of all observations starting with the ego agent and
/// continuing in cyclic agent-id order.
Eigen::VectorXd critic_input(std::span<const std::vector<double>> observations, std::size_t ego);

double value(const PolicyParams& params, const Eigen::VectorXd& critic_obs);

}  // namespace cbfmarl::marl

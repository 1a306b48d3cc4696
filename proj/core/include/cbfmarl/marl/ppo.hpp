#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cbfmarl/env.hpp"
#include "cbfmarl/marl/policy.hpp"

namespace cbfmarl::marl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  int epochs_per_batch = 4;
  std::size_t minibatch_size = 512;
  std::size_t steps_per_rollout = 4096;  ///< agent-steps per update
  double learning_rate = 3e-4;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::size_t total_env_steps = 200000;
  std::uint64_t seed = 1;
  NetworkShape network;

  void validate() const;
};

/// Agent-step samples from one or more parallel environments. Stream
/// s = worker * num_agents + agent; sample index t * num_streams + s.
struct RolloutBuffer {
  RolloutBuffer() = default;
  RolloutBuffer(std::size_t obs_dim, std::size_t num_agents, std::size_t env_steps, std::size_t workers = 1);

  std::size_t num_agents = 0;
  std::size_t num_streams = 0;
  std::size_t capacity = 0;  ///< env steps
  std::size_t steps = 0;     ///< env steps stored so far
  Eigen::MatrixXd obs;
  Eigen::MatrixXd critic_obs;
  Eigen::MatrixXd z;
  Eigen::VectorXd log_prob;
  Eigen::VectorXd reward;
  Eigen::VectorXd value;
  Eigen::VectorXd done;       ///< 1 when the agent's trajectory ended after this sample
  Eigen::VectorXd bootstrap;  ///< value of each stream's state after the last stored step
  Eigen::VectorXd advantage;
  Eigen::VectorXd returns;

  bool full() const { return steps == capacity; }
  std::size_t size() const { return steps * num_streams; }
};

struct Advantages {
  std::vector<double> advantage;
  std::vector<double> returns;
};

/// Generalized advantage estimation over one agent's sample stream:
///   delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t
///   A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}
/// with V_T = last_value.
Advantages compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const double> dones,
                       double last_value, double gamma, double lambda);

/// Fills buffer.advantage and buffer.returns, stream by stream.
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda);

/// Normalizes to zero mean and unit (population) standard deviation.
void normalize(Eigen::VectorXd& v);

struct Batch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd critic_obs;
  Eigen::MatrixXd z;
  Eigen::VectorXd log_prob_old;
  Eigen::VectorXd advantage;
  Eigen::VectorXd returns;
};

Batch gather(const RolloutBuffer& buffer, std::span<const Eigen::Index> indices);

struct Gradients {
  Eigen::VectorXd actor;
  Eigen::Vector2d log_std = Eigen::Vector2d::Zero();
  Eigen::VectorXd critic;

  double norm() const;
  void scale(double s);
};

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Clipped surrogate + value_coef * 0.5 * mean squared value error
/// - entropy_coef * entropy. Fills `grad` when given.
LossTerms ppo_loss(const PolicyParams& params, const Batch& batch, const PpoConfig& config, Gradients* grad);

class Adam {
 public:
  explicit Adam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-5);
  void step(PolicyParams& params, const Gradients& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Gradients m_;
  Gradients v_;
};

struct TrainStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

/// Advantage normalization over the whole buffer, then epochs of shuffled
/// minibatch Adam steps with global gradient-norm clipping. Throws
/// NumericalError on a non-finite loss.
TrainStats ppo_update(PolicyParams& params, RolloutBuffer& buffer, const PpoConfig& config, Adam& optimizer,
                      std::mt19937_64& rng);

struct CurvePoint {
  std::size_t env_steps = 0;
  double mean_episode_reward = 0.0;  ///< per-agent episode return, mean over finished episodes
  double mean_step_reward = 0.0;     ///< per agent-step, over the rollout
  TrainStats stats;
};

struct TrainOptions {
  std::size_t workers = 1;
  std::function<void(const CurvePoint&)> on_progress;
  std::size_t checkpoint_every = 0;  ///< in updates; 0 disables
  std::function<void(const PolicyParams&, std::size_t env_steps)> on_checkpoint;
};

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
};

/// Rollouts run on `workers` threads, each with its own environment and
/// random stream; results are bit-reproducible from the seed with one worker.
TrainResult train(const EnvConfig& env_config, const PpoConfig& config, const TrainOptions& options = {});

/// Initial policy exactly as train() would create it.
PolicyParams initial_policy(const IntersectionEnv& env, const PpoConfig& config);

}  // namespace cbfmarl::marl

#include "cbfmarl/marl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <limits>
#include <thread>

#include "cbfmarl/errors.hpp"

namespace cbfmarl::marl {

void PpoConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must lie in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo: gae_lambda must lie in [0, 1]");
  if (!(clip_ratio > 0.0)) throw ConfigError("ppo: clip_ratio must be positive");
  if (epochs_per_batch < 1) throw ConfigError("ppo: epochs_per_batch must be positive");
  if (minibatch_size < 1) throw ConfigError("ppo: minibatch_size must be positive");
  if (steps_per_rollout < 1) throw ConfigError("ppo: steps_per_rollout must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo: learning_rate must be positive");
  if (!(entropy_coef >= 0.0 && value_coef >= 0.0)) throw ConfigError("ppo: loss coefficients must be non-negative");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo: max_grad_norm must be positive");
}

RolloutBuffer::RolloutBuffer(std::size_t obs_dim, std::size_t agents, std::size_t env_steps, std::size_t workers)
    : num_agents(agents), num_streams(agents * workers), capacity(env_steps) {
  const auto n = static_cast<Eigen::Index>(num_streams * env_steps);
  obs.resize(static_cast<Eigen::Index>(obs_dim), n);
  critic_obs.resize(static_cast<Eigen::Index>(obs_dim * agents), n);
  z.resize(2, n);
  log_prob.resize(n);
  reward.resize(n);
  value.resize(n);
  done.resize(n);
  bootstrap = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_streams));
}

Advantages compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const double> dones,
                       double last_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
  Advantages out;
  out.advantage.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = last_value;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double keep = 1.0 - dones[k];
    const double delta = rewards[k] + gamma * next_value * keep - values[k];
    next_adv = delta + gamma * lambda * keep * next_adv;
    out.advantage[k] = next_adv;
    out.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return out;
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda) {
  const std::size_t n = buffer.num_streams;
  const std::size_t t_max = buffer.steps;
  buffer.advantage.resize(static_cast<Eigen::Index>(buffer.size()));
  buffer.returns.resize(static_cast<Eigen::Index>(buffer.size()));
  std::vector<double> r(t_max), v(t_max), d(t_max);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < t_max; ++t) {
      const auto k = static_cast<Eigen::Index>(t * n + i);
      r[t] = buffer.reward(k);
      v[t] = buffer.value(k);
      d[t] = buffer.done(k);
    }
    const auto a = compute_gae(r, v, d, buffer.bootstrap(static_cast<Eigen::Index>(i)), gamma, lambda);
    for (std::size_t t = 0; t < t_max; ++t) {
      const auto k = static_cast<Eigen::Index>(t * n + i);
      buffer.advantage(k) = a.advantage[t];
      buffer.returns(k) = a.returns[t];
    }
  }
}

void normalize(Eigen::VectorXd& v) {
  if (v.size() == 0) return;
  const double mean = v.mean();
  v.array() -= mean;
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  v /= sd + 1e-12;
}

Batch gather(const RolloutBuffer& buffer, std::span<const Eigen::Index> indices) {
  const auto b = static_cast<Eigen::Index>(indices.size());
  Batch out;
  out.obs.resize(buffer.obs.rows(), b);
  out.critic_obs.resize(buffer.critic_obs.rows(), b);
  out.z.resize(2, b);
  out.log_prob_old.resize(b);
  out.advantage.resize(b);
  out.returns.resize(b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const Eigen::Index k = indices[static_cast<std::size_t>(c)];
    out.obs.col(c) = buffer.obs.col(k);
    out.critic_obs.col(c) = buffer.critic_obs.col(k);
    out.z.col(c) = buffer.z.col(k);
    out.log_prob_old(c) = buffer.log_prob(k);
    out.advantage(c) = buffer.advantage(k);
    out.returns(c) = buffer.returns(k);
  }
  return out;
}

double Gradients::norm() const {
  return std::sqrt(actor.squaredNorm() + log_std.squaredNorm() + critic.squaredNorm());
}

void Gradients::scale(double s) {
  actor *= s;
  log_std *= s;
  critic *= s;
}

LossTerms ppo_loss(const PolicyParams& params, const Batch& batch, const PpoConfig& config, Gradients* grad) {
  constexpr double kGaussEntropy = 1.4189385332046727418;  // 0.5 (1 + log 2 pi)
  const Eigen::Index b = batch.obs.cols();
  if (b == 0) throw std::invalid_argument("ppo_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(b);

  Mlp::Cache actor_cache;
  Mlp::Cache critic_cache;
  const Eigen::MatrixXd mean = params.actor.forward(batch.obs, grad ? &actor_cache : nullptr);
  const Eigen::MatrixXd values = params.critic.forward(batch.critic_obs, grad ? &critic_cache : nullptr);
  const Eigen::Array2d inv_var = (-2.0 * params.log_std).array().exp();

  LossTerms out;
  Eigen::MatrixXd d_mean(2, b);
  Eigen::Vector2d d_log_std = Eigen::Vector2d::Zero();
  Eigen::MatrixXd d_value(1, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const Eigen::Array2d diff = (batch.z.col(c) - mean.col(c)).array();
    const double lp_new = log_prob(mean.col(c), params.log_std, batch.z.col(c), params.scale);
    const double lp_new_minus_old = lp_new - batch.log_prob_old(c);
    const double ratio = std::exp(lp_new_minus_old);
    const double adv = batch.advantage(c);
    const double clipped = std::clamp(ratio, 1.0 - config.clip_ratio, 1.0 + config.clip_ratio);
    const bool unclipped_active = ratio * adv <= clipped * adv;
    out.policy -= std::min(ratio * adv, clipped * adv) * inv_b;
    out.approx_kl -= lp_new_minus_old * inv_b;
    if (std::abs(ratio - 1.0) > config.clip_ratio) out.clip_fraction += inv_b;

    const double g_lp = unclipped_active ? -ratio * adv * inv_b : 0.0;
    d_mean.col(c) = (g_lp * diff * inv_var).matrix();
    d_log_std += (g_lp * (diff.square() * inv_var - 1.0)).matrix();

    const double err = values(0, c) - batch.returns(c);
    out.value += 0.5 * err * err * inv_b;
    d_value(0, c) = config.value_coef * err * inv_b;
  }
  out.entropy = (params.log_std.array() + kGaussEntropy).sum();
  out.total = out.policy + config.value_coef * out.value - config.entropy_coef * out.entropy;

  if (grad) {
    grad->actor = params.actor.backward(actor_cache, d_mean);
    grad->log_std = d_log_std - config.entropy_coef * Eigen::Vector2d::Ones();
    grad->critic = params.critic.backward(critic_cache, d_value);
  }
  return out;
}

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(PolicyParams& params, const Gradients& grad) {
  if (t_ == 0) {
    m_.actor = Eigen::VectorXd::Zero(grad.actor.size());
    m_.critic = Eigen::VectorXd::Zero(grad.critic.size());
    v_ = m_;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  update(params.actor.params(), m_.actor, v_.actor, grad.actor);
  update(params.log_std, m_.log_std, v_.log_std, grad.log_std);
  update(params.critic.params(), m_.critic, v_.critic, grad.critic);
}

TrainStats ppo_update(PolicyParams& params, RolloutBuffer& buffer, const PpoConfig& config, Adam& optimizer,
                      std::mt19937_64& rng) {
  if (!buffer.full()) throw std::invalid_argument("ppo_update: buffer is not full");
  compute_advantages(buffer, config.gamma, config.gae_lambda);
  normalize(buffer.advantage);

  const std::size_t total = buffer.size();
  std::vector<Eigen::Index> order(total);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const std::size_t mb = std::min(config.minibatch_size, total);

  TrainStats stats;
  std::size_t count = 0;
  for (int epoch = 0; epoch < config.epochs_per_batch; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < total; start += mb) {
      const std::size_t end = std::min(total, start + mb);
      const Batch batch = gather(buffer, std::span(order).subspan(start, end - start));
      Gradients grad;
      const LossTerms loss = ppo_loss(params, batch, config, &grad);
      const double gn = grad.norm();
      if (!std::isfinite(loss.total) || !std::isfinite(gn)) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss (policy=" << loss.policy << " value=" << loss.value
            << " entropy=" << loss.entropy << " grad_norm=" << gn << ") at epoch " << epoch;
        throw NumericalError(msg.str());
      }
      if (gn > config.max_grad_norm) grad.scale(config.max_grad_norm / gn);
      optimizer.step(params, grad);
      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      stats.clip_fraction += loss.clip_fraction;
      stats.grad_norm += gn;
      ++count;
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  stats.policy_loss *= inv;
  stats.value_loss *= inv;
  stats.entropy *= inv;
  stats.approx_kl *= inv;
  stats.clip_fraction *= inv;
  stats.grad_norm *= inv;
  return stats;
}

PolicyParams initial_policy(const IntersectionEnv& env, const PpoConfig& config) {
  std::mt19937_64 rng(config.seed);
  return make_policy(env.observation_size(), env.config().num_agents, config.network,
                     ActionScale::from(env.config().vehicle), rng);
}

namespace {

struct Worker {
  const IntersectionEnv* env = nullptr;
  std::size_t index = 0;
  WorldState world;
  std::mt19937_64 rng;
  std::vector<Observation> obs;
  std::vector<double> episode_return;
  std::vector<double> finished;  ///< agent-mean returns of episodes that ended this rollout
  double reward_sum = 0.0;

  void start_episode() {
    world = env->reset(rng());
    observe_all();
    std::fill(episode_return.begin(), episode_return.end(), 0.0);
  }

  void observe_all() {
    for (AgentId i = 0; i < obs.size(); ++i) obs[i] = env->observe(world, i);
  }

  Eigen::MatrixXd critic_batch() const {
    const std::size_t n = obs.size();
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n * obs[0].size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) c.col(static_cast<Eigen::Index>(i)) = critic_input(obs, i);
    return c;
  }

  void collect(const PolicyParams& params, const PpoConfig& config, RolloutBuffer& buffer) {
    const std::size_t n = obs.size();
    const auto dim = static_cast<Eigen::Index>(params.obs_dim);
    const std::size_t horizon = env->config().horizon_steps;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<ControlInput> actions(n);
    finished.clear();
    reward_sum = 0.0;

    for (std::size_t t = 0; t < buffer.capacity; ++t) {
      Eigen::MatrixXd o(dim, static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        o.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(obs[i].data(), dim);
      const Eigen::MatrixXd c = critic_batch();
      const Eigen::MatrixXd mean = params.actor.forward(o);
      const Eigen::MatrixXd values = params.critic.forward(c);
      const Eigen::Vector2d sigma = params.log_std.array().exp();

      std::vector<Eigen::Index> cols(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(t * buffer.num_streams + index * n + i);
        cols[i] = k;
        Eigen::Vector2d z;
        for (int a = 0; a < 2; ++a) z(a) = mean(a, static_cast<Eigen::Index>(i)) + sigma(a) * normal(rng);
        actions[i] = squash(z, params.scale);
        buffer.obs.col(k) = o.col(static_cast<Eigen::Index>(i));
        buffer.critic_obs.col(k) = c.col(static_cast<Eigen::Index>(i));
        buffer.z.col(k) = z;
        buffer.log_prob(k) = log_prob(mean.col(static_cast<Eigen::Index>(i)), params.log_std, z, params.scale);
        buffer.value(k) = values(0, static_cast<Eigen::Index>(i));
      }

      const StepResult res = env->step(world, actions);
      observe_all();
      for (std::size_t i = 0; i < n; ++i) {
        const double r = res.rewards[i].total;
        buffer.reward(cols[i]) = r;
        buffer.done(cols[i]) = res.respawned[i] ? 1.0 : 0.0;
        episode_return[i] += r;
        reward_sum += r;
      }

      if (world.step_index >= horizon) {
        // Truncation: fold the bootstrap value into the last reward.
        const Eigen::MatrixXd next_values = params.critic.forward(critic_batch());
        for (std::size_t i = 0; i < n; ++i) {
          if (buffer.done(cols[i]) == 0.0) buffer.reward(cols[i]) += config.gamma * next_values(0, static_cast<Eigen::Index>(i));
          buffer.done(cols[i]) = 1.0;
        }
        finished.push_back(std::accumulate(episode_return.begin(), episode_return.end(), 0.0) /
                           static_cast<double>(n));
        start_episode();
      }
    }
    const Eigen::MatrixXd last = params.critic.forward(critic_batch());
    for (std::size_t i = 0; i < n; ++i)
      buffer.bootstrap(static_cast<Eigen::Index>(index * n + i)) = last(0, static_cast<Eigen::Index>(i));
  }
};

}  // namespace

TrainResult train(const EnvConfig& env_config, const PpoConfig& config, const TrainOptions& options) {
  config.validate();
  if (options.workers < 1) throw ConfigError("train: need at least one worker");
  const IntersectionEnv env(env_config);
  TrainResult result;
  result.params = initial_policy(env, config);
  if (config.total_env_steps == 0) return result;

  const std::size_t n = env_config.num_agents;
  const std::size_t workers = options.workers;
  const std::size_t steps_per_worker = std::max<std::size_t>(1, (config.steps_per_rollout + n * workers - 1) / (n * workers));
  const std::size_t env_steps_per_update = steps_per_worker * workers;
  const std::size_t updates = (config.total_env_steps + env_steps_per_update - 1) / env_steps_per_update;

  std::vector<Worker> pool(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(w), 0x5eedu};
    pool[w].env = &env;
    pool[w].index = w;
    pool[w].rng.seed(seq);
    pool[w].obs.resize(n);
    pool[w].episode_return.assign(n, 0.0);
    pool[w].start_episode();
  }
  std::seed_seq update_seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                           0xadu};
  std::mt19937_64 update_rng(update_seq);
  Adam optimizer(config.learning_rate);
  double last_episode_reward = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t u = 0; u < updates; ++u) {
    RolloutBuffer buffer(env.observation_size(), n, steps_per_worker, workers);
    if (workers == 1) {
      pool[0].collect(result.params, config, buffer);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
          threads.emplace_back([&, w] {
            try {
              pool[w].collect(result.params, config, buffer);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    buffer.steps = buffer.capacity;

    CurvePoint point;
    point.env_steps = (u + 1) * env_steps_per_update;
    double reward_sum = 0.0;
    double episode_sum = 0.0;
    std::size_t episodes = 0;
    for (const auto& w : pool) {
      reward_sum += w.reward_sum;
      for (double r : w.finished) episode_sum += r;
      episodes += w.finished.size();
    }
    if (episodes > 0) last_episode_reward = episode_sum / static_cast<double>(episodes);
    point.mean_episode_reward = last_episode_reward;
    point.mean_step_reward = reward_sum / static_cast<double>(buffer.size());
    point.stats = ppo_update(result.params, buffer, config, optimizer, update_rng);
    result.curve.push_back(point);
    if (options.on_progress) options.on_progress(point);
    if (options.checkpoint_every > 0 && options.on_checkpoint && (u + 1) % options.checkpoint_every == 0)
      options.on_checkpoint(result.params, point.env_steps);
  }
  return result;
}

}  // namespace cbfmarl::marl

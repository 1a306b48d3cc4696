#include "cbfmarl/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cbfmarl/errors.hpp"
#include "cbfmarl/marl/checkpoint.hpp"

namespace cbfmarl {

std::string GridPoint::label() const {
  switch (method) {
    case RewardMethod::kCbf: return fmt::format("cbf_psi{}", psi_th);
    case RewardMethod::kDistance: return fmt::format("distance_road{}_veh{}", d_road_th, d_veh_th);
    case RewardMethod::kTtc: return fmt::format("ttc_road{}_ttc{}", d_road_th, t_ttc_th);
  }
  return "?";
}

RewardConfig GridPoint::apply(RewardConfig base) const {
  base.method = method;
  if (method == RewardMethod::kCbf) base.psi_th = psi_th;
  if (method != RewardMethod::kCbf) base.d_road_th = d_road_th;
  if (method == RewardMethod::kDistance) base.d_veh_th = d_veh_th;
  if (method == RewardMethod::kTtc) base.t_ttc_th = t_ttc_th;
  return base;
}

std::vector<GridPoint> make_grid(RewardMethod method, const SweepGrids& g) {
  std::vector<GridPoint> out;
  if (method == RewardMethod::kCbf) {
    for (double p : g.psi_th) out.push_back({method, p, 0.0, 0.0, 0.0});
    return out;
  }
  const auto& second = method == RewardMethod::kDistance ? g.d_veh_th : g.t_ttc_th;
  for (double road : g.d_road_th) {
    for (double v : second) {
      GridPoint p{method, 0.0, road, 0.0, 0.0};
      (method == RewardMethod::kDistance ? p.d_veh_th : p.t_ttc_th) = v;
      out.push_back(p);
    }
  }
  return out;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_of: empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  const double m = mean_of(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

SweepRecord make_record(const GridPoint& point, const EvalResult& eval, double activation_epsilon) {
  SweepRecord r;
  r.point = point;
  for (const auto& m : eval.per_seed) {
    r.seed_totals.push_back(m.total.value);
    r.exits += m.total.exits;
    r.collision_events += m.total.collision_events;
  }
  r.mean = mean_of(r.seed_totals);
  r.std = population_std(r.seed_totals);
  r.activation_degree = eval.activation_degree(activation_epsilon);
  r.mean_correction = eval.mean_correction();
  return r;
}

SweepSummary summarize(std::span<const SweepRecord> records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  std::vector<double> means;
  double act = 0.0;
  for (const auto& r : records) {
    means.push_back(r.mean);
    act += r.activation_degree;
  }
  SweepSummary s;
  s.method = records.front().point.method;
  s.points = records.size();
  s.mean = mean_of(means);
  s.std = population_std(means);
  s.best = *std::max_element(means.begin(), means.end());
  s.activation_degree = act / static_cast<double>(records.size());
  return s;
}

std::string checkpoint_path(const std::string& dir, const GridPoint& point) {
  return (std::filesystem::path(dir) / ("ckpt_" + point.label() + ".json")).string();
}

namespace {

SweepRecord run_point(const GridPoint& point, const EnvConfig& base, const marl::PpoConfig& ppo,
                      const EvalConfig& eval, const SweepOptions& options) {
  EnvConfig env_config = base;
  env_config.reward = point.apply(base.reward);
  const IntersectionEnv env(env_config);

  marl::PolicyParams params;
  const std::string path = options.checkpoint_dir.empty() ? "" : checkpoint_path(options.checkpoint_dir, point);
  if (options.eval_only) {
    if (path.empty()) throw MissingFileError("sweep: eval-only mode needs a checkpoint directory");
    if (!std::filesystem::exists(path)) throw MissingFileError("missing checkpoint " + path);
    marl::Checkpoint c = marl::load_checkpoint(path);
    if (!options.config_hash.empty() && c.config_hash != options.config_hash)
      throw ConfigError("checkpoint " + path + " was trained with config hash " + c.config_hash);
    params = std::move(c.params);
    check_compatible(params, env);
  } else {
    marl::TrainResult trained = marl::train(env_config, ppo, {});
    if (options.on_trained) options.on_trained(point, trained);
    if (!path.empty())
      marl::save_checkpoint(path, {trained.params, options.config_hash, std::string(to_string(point.method)),
                                   ppo.total_env_steps});
    params = std::move(trained.params);
  }

  EvalConfig ec = eval;
  ec.filter_diagnostics = true;
  PolicyController controller(std::move(params), ec.deterministic_policy);
  return make_record(point, evaluate_policy(controller, env, ec), ec.activation_epsilon);
}

}  // namespace

SweepResult sweep(std::span<const GridPoint> grid, const EnvConfig& base, const marl::PpoConfig& ppo,
                  const EvalConfig& eval, const SweepOptions& options) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  if (!options.checkpoint_dir.empty() && !options.eval_only)
    std::filesystem::create_directories(options.checkpoint_dir);
  SweepResult result;
  result.records.resize(grid.size());
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, grid.size());
  if (workers == 1) {
    for (std::size_t g = 0; g < grid.size(); ++g) result.records[g] = run_point(grid[g], base, ppo, eval, options);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(grid.size());
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t g = next++; g < grid.size(); g = next++) {
            try {
              result.records[g] = run_point(grid[g], base, ppo, eval, options);
            } catch (...) {
              errors[g] = std::current_exception();
            }
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  result.summary = summarize(result.records);
  return result;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records) {
  out << "method,psi_th,d_road_th,d_veh_th,t_ttc_th,seed_totals,mean,std,activation_degree,mean_correction,exits,"
         "collision_events\n";
  for (const auto& r : records) {
    std::string totals;
    for (std::size_t k = 0; k < r.seed_totals.size(); ++k) totals += (k ? ";" : "") + fmt::format("{}", r.seed_totals[k]);
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.point.method), r.point.psi_th,
                       r.point.d_road_th, r.point.d_veh_th, r.point.t_ttc_th, totals, r.mean, r.std,
                       r.activation_degree, r.mean_correction, r.exits, r.collision_events);
  }
}

std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
  std::vector<SweepRecord> out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("sweep csv: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw ConfigError("sweep csv: expected 12 fields, got " + std::to_string(f.size()));
    try {
      SweepRecord r;
      r.point.method = parse_reward_method(f[0]);
      r.point.psi_th = std::stod(f[1]);
      r.point.d_road_th = std::stod(f[2]);
      r.point.d_veh_th = std::stod(f[3]);
      r.point.t_ttc_th = std::stod(f[4]);
      std::stringstream ts(f[5]);
      for (std::string t; std::getline(ts, t, ';');) r.seed_totals.push_back(std::stod(t));
      r.mean = std::stod(f[6]);
      r.std = std::stod(f[7]);
      r.activation_degree = std::stod(f[8]);
      r.mean_correction = std::stod(f[9]);
      r.exits = std::stoul(f[10]);
      r.collision_events = std::stoul(f[11]);
      out.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw ConfigError(std::string("sweep csv: bad field: ") + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const SweepSummary> summaries) {
  out << "method,points,mean,std,best,activation_degree\n";
  for (const auto& s : summaries)
    out << fmt::format("{},{},{},{},{},{}\n", to_string(s.method), s.points, s.mean, s.std, s.best,
                       s.activation_degree);
}

void write_curve_csv(std::ostream& out, std::span<const marl::CurvePoint> curve) {
  out << "env_steps,mean_episode_reward,mean_step_reward,policy_loss,value_loss,entropy,approx_kl,clip_fraction,"
         "grad_norm\n";
  for (const auto& p : curve)
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", p.env_steps, p.mean_episode_reward, p.mean_step_reward,
                       p.stats.policy_loss, p.stats.value_loss, p.stats.entropy, p.stats.approx_kl,
                       p.stats.clip_fraction, p.stats.grad_norm);
}

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> metrics) {
  out << "seed,total_reward,total_reward_per_vehicle,exits,collision_events,collided_vehicles,road_collisions,"
         "vehicle_collisions,comfort_penalty,mean_step_reward,activation_degree,mean_correction,infeasible_filters\n";
  for (const auto& m : metrics)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", m.seed, m.total.value, m.total.value_per_vehicle,
                       m.total.exits, m.total.collision_events, m.total.collided_vehicles, m.road_collisions,
                       m.vehicle_collisions, m.total.comfort_penalty, m.mean_step_reward, m.activation_degree,
                       m.mean_correction, m.infeasible_filters);
}

}  // namespace cbfmarl

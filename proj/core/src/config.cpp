#include "cbfmarl/config.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <type_traits>

#include "cbfmarl/errors.hpp"

namespace cbfmarl {

using nlohmann::json;

namespace {

// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) type_error(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) type_error(key, "an integer");
      out = v->get<int>();
    }
  }
  template <class T>
    requires(std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
  void get(const char* key, T& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) type_error(key, "a non-negative integer");
      out = v->get<T>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) type_error(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) type_error(key, "a string");
      out = v->get<std::string>();
    }
  }
  template <class T>
  void get(const char* key, std::vector<T>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) type_error(key, "an array");
      std::vector<T> values;
      for (const auto& e : *v) {
        if constexpr (std::is_floating_point_v<T>) {
          if (!e.is_number()) type_error(key, "an array of numbers");
        } else if constexpr (std::is_unsigned_v<T>) {
          if (!e.is_number_unsigned()) type_error(key, "an array of non-negative integers");
        } else {
          if (!e.is_number_integer()) type_error(key, "an array of integers");
        }
        values.push_back(e.get<T>());
      }
      out = std::move(values);
    }
  }

  /// Nested object, or nullptr when absent.
  std::unique_ptr<Section> sub(const char* key) {
    const json* v = find(key);
    return v ? std::make_unique<Section>(*v, name_.empty() ? key : name_ + "." + key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown key '" + (name_.empty() ? item.key() : name_ + "." + item.key()) + "'");
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void type_error(const char* key, const char* what) const {
    throw ConfigError((name_.empty() ? std::string(key) : name_ + "." + key) + ": expected " + what);
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json map_json(const MapConfig& m) {
  return {{"lane_width", m.lane_width},
          {"lanes_per_direction", m.lanes_per_direction},
          {"arm_length", m.arm_length},
          {"left_turn_radius", m.left_turn_radius},
          {"right_turn_radius", m.right_turn_radius},
          {"entry_length", m.entry_length},
          {"exit_length", m.exit_length},
          {"max_arc_step_deg", m.max_arc_step_deg}};
}

json vehicle_json(const VehicleParams& p) {
  return {{"wheelbase", p.wheelbase},         {"rear_wheelbase", p.rear_wheelbase},
          {"body_length", p.body_length},     {"body_width", p.body_width},
          {"v_max", p.v_max},                 {"accel_min", p.accel_min},
          {"accel_max", p.accel_max},         {"steering_rate_min", p.steering_rate_min},
          {"steering_rate_max", p.steering_rate_max}, {"delta_max", p.delta_max}};
}

json env_json(const EnvConfig& e) {
  return {{"num_agents", e.num_agents},   {"n_circles", e.n_circles},
          {"dt", e.dt},                   {"horizon_steps", e.horizon_steps},
          {"spawn_spacing", e.spawn_spacing}, {"max_spawn_attempts", e.max_spawn_attempts}};
}

void read_map(Section& s, MapConfig& m) {
  s.get("lane_width", m.lane_width);
  s.get("lanes_per_direction", m.lanes_per_direction);
  s.get("arm_length", m.arm_length);
  s.get("left_turn_radius", m.left_turn_radius);
  s.get("right_turn_radius", m.right_turn_radius);
  s.get("entry_length", m.entry_length);
  s.get("exit_length", m.exit_length);
  s.get("max_arc_step_deg", m.max_arc_step_deg);
}

void read_vehicle(Section& s, VehicleParams& p) {
  s.get("wheelbase", p.wheelbase);
  s.get("rear_wheelbase", p.rear_wheelbase);
  s.get("body_length", p.body_length);
  s.get("body_width", p.body_width);
  s.get("v_max", p.v_max);
  s.get("accel_min", p.accel_min);
  s.get("accel_max", p.accel_max);
  s.get("steering_rate_min", p.steering_rate_min);
  s.get("steering_rate_max", p.steering_rate_max);
  s.get("delta_max", p.delta_max);
}

void read_env(Section& s, EnvConfig& e) {
  s.get("num_agents", e.num_agents);
  s.get("n_circles", e.n_circles);
  s.get("dt", e.dt);
  s.get("horizon_steps", e.horizon_steps);
  s.get("spawn_spacing", e.spawn_spacing);
  s.get("max_spawn_attempts", e.max_spawn_attempts);
}

void read_reward(Section& s, RewardConfig& r) {
  std::string method(to_string(r.method));
  s.get("method", method);
  try {
    r.method = parse_reward_method(method);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("reward.method: ") + e.what());
  }
  s.get("psi_th", r.psi_th);
  s.get("d_road_th", r.d_road_th);
  s.get("d_veh_th", r.d_veh_th);
  s.get("t_ttc_th", r.t_ttc_th);
  s.get("w_prog", r.w_prog);
  s.get("weights", r.weights);
  s.get("lookahead_steps", r.lookahead_steps);
}

void read_cbf(Section& s, CbfConfig& c) {
  s.get("gamma", c.gamma);
  std::string mode = c.remainder_mode == RemainderMode::kZero ? "zero" : "constant";
  s.get("remainder_mode", mode);
  if (mode == "zero") {
    c.remainder_mode = RemainderMode::kZero;
  } else if (mode == "constant") {
    c.remainder_mode = RemainderMode::kConstant;
  } else {
    throw ConfigError("cbf.remainder_mode: expected 'zero' or 'constant'");
  }
  s.get("remainder", c.remainder);
}

void read_ppo(Section& s, marl::PpoConfig& p) {
  s.get("gamma", p.gamma);
  s.get("gae_lambda", p.gae_lambda);
  s.get("clip_ratio", p.clip_ratio);
  s.get("epochs_per_batch", p.epochs_per_batch);
  s.get("minibatch_size", p.minibatch_size);
  s.get("steps_per_rollout", p.steps_per_rollout);
  s.get("learning_rate", p.learning_rate);
  s.get("entropy_coef", p.entropy_coef);
  s.get("value_coef", p.value_coef);
  s.get("max_grad_norm", p.max_grad_norm);
  s.get("total_env_steps", p.total_env_steps);
  s.get("actor_hidden", p.network.actor_hidden);
  s.get("critic_hidden", p.network.critic_hidden);
  s.get("init_log_std", p.network.init_log_std);
}

void read_eval(Section& s, EvalConfig& e) {
  s.get("t_eval", e.t_eval);
  s.get("w_comf", e.w_comf);
  s.get("a_norm", e.a_norm);
  s.get("j_norm", e.j_norm);
  s.get("seeds", e.seeds);
  s.get("deterministic_policy", e.deterministic_policy);
  s.get("filter_diagnostics", e.filter_diagnostics);
  s.get("activation_epsilon", e.activation_epsilon);
}

void read_sweep(Section& s, SweepGrids& g) {
  s.get("psi_th", g.psi_th);
  s.get("d_road_th", g.d_road_th);
  s.get("d_veh_th", g.d_veh_th);
  s.get("t_ttc_th", g.t_ttc_th);
}

template <class F>
void with_section(Section& root, const char* key, F&& read) {
  if (auto s = root.sub(key)) {
    read(*s);
    s->finish();
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    env.validate();
    // Also checks the map and the spawn capacity.
    (void)IntersectionEnv(env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ppo.validate();
  eval.validate();
  if (workers < 1) throw ConfigError("workers must be positive");
  if (out.empty()) throw ConfigError("out must not be empty");
  for (const auto* grid : {&sweep.psi_th, &sweep.d_road_th, &sweep.d_veh_th, &sweep.t_ttc_th})
    for (double v : *grid)
      if (!(v > 0.0)) throw ConfigError("sweep: grid values must be positive");
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "");
  with_section(root, "map", [&](Section& s) { read_map(s, c.env.map); });
  with_section(root, "vehicle", [&](Section& s) { read_vehicle(s, c.env.vehicle); });
  with_section(root, "env", [&](Section& s) { read_env(s, c.env); });
  with_section(root, "reward", [&](Section& s) { read_reward(s, c.env.reward); });
  with_section(root, "cbf", [&](Section& s) { read_cbf(s, c.env.cbf); });
  with_section(root, "ppo", [&](Section& s) { read_ppo(s, c.ppo); });
  with_section(root, "eval", [&](Section& s) { read_eval(s, c.eval); });
  with_section(root, "sweep", [&](Section& s) { read_sweep(s, c.sweep); });
  root.get("out", c.out);
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  root.finish();
  c.env.cbf.dt = c.env.dt;
  c.ppo.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string dump_run_config(const RunConfig& c) {
  const auto& r = c.env.reward;
  const auto& p = c.ppo;
  const auto& e = c.eval;
  json j = {
      {"map", map_json(c.env.map)},
      {"vehicle", vehicle_json(c.env.vehicle)},
      {"env", env_json(c.env)},
      {"reward",
       {{"method", std::string(to_string(r.method))},
        {"psi_th", r.psi_th},
        {"d_road_th", r.d_road_th},
        {"d_veh_th", r.d_veh_th},
        {"t_ttc_th", r.t_ttc_th},
        {"w_prog", r.w_prog},
        {"weights", r.weights},
        {"lookahead_steps", r.lookahead_steps}}},
      {"cbf",
       {{"gamma", c.env.cbf.gamma},
        {"remainder_mode", c.env.cbf.remainder_mode == RemainderMode::kZero ? "zero" : "constant"},
        {"remainder", c.env.cbf.remainder}}},
      {"ppo",
       {{"gamma", p.gamma},
        {"gae_lambda", p.gae_lambda},
        {"clip_ratio", p.clip_ratio},
        {"epochs_per_batch", p.epochs_per_batch},
        {"minibatch_size", p.minibatch_size},
        {"steps_per_rollout", p.steps_per_rollout},
        {"learning_rate", p.learning_rate},
        {"entropy_coef", p.entropy_coef},
        {"value_coef", p.value_coef},
        {"max_grad_norm", p.max_grad_norm},
        {"total_env_steps", p.total_env_steps},
        {"actor_hidden", p.network.actor_hidden},
        {"critic_hidden", p.network.critic_hidden},
        {"init_log_std", p.network.init_log_std}}},
      {"eval",
       {{"t_eval", e.t_eval},
        {"w_comf", e.w_comf},
        {"a_norm", e.a_norm},
        {"j_norm", e.j_norm},
        {"seeds", e.seeds},
        {"deterministic_policy", e.deterministic_policy},
        {"filter_diagnostics", e.filter_diagnostics},
        {"activation_epsilon", e.activation_epsilon}}},
      {"sweep",
       {{"psi_th", c.sweep.psi_th},
        {"d_road_th", c.sweep.d_road_th},
        {"d_veh_th", c.sweep.d_veh_th},
        {"t_ttc_th", c.sweep.t_ttc_th}}},
      {"out", c.out},
      {"seed", c.seed},
      {"workers", c.workers}};
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& c) {
  const json j = {{"map", map_json(c.env.map)}, {"vehicle", vehicle_json(c.env.vehicle)}, {"env", env_json(c.env)}};
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cbfmarl

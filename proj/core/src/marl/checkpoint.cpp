#include "cbfmarl/marl/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cbfmarl/errors.hpp"

namespace cbfmarl::marl {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json mlp_json(const Mlp& m) {
  const auto& p = m.params();
  return {{"sizes", m.sizes()}, {"params", std::vector<double>(p.data(), p.data() + p.size())}};
}

Mlp mlp_from(const json& j) {
  Mlp m(j.at("sizes").get<std::vector<int>>());
  const auto values = j.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != m.num_params())
    throw ConfigError("checkpoint: parameter count does not match the layer sizes");
  m.params() = Eigen::Map<const Eigen::VectorXd>(values.data(), m.num_params());
  return m;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  const PolicyParams& p = c.params;
  const json j = {{"format", "cbfmarl-checkpoint"},
                  {"version", kFormatVersion},
                  {"config_hash", c.config_hash},
                  {"method", c.method},
                  {"env_steps", c.env_steps},
                  {"obs_dim", p.obs_dim},
                  {"num_agents", p.num_agents},
                  {"scale", {{"center", p.scale.center}, {"half_range", p.scale.half_range}}},
                  {"log_std", {p.log_std(0), p.log_std(1)}},
                  {"actor", mlp_json(p.actor)},
                  {"critic", mlp_json(p.critic)}};
  return j.dump() + "\n";
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  Checkpoint c;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "cbfmarl-checkpoint") throw ConfigError("checkpoint: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw ConfigError("checkpoint: unsupported version");
    c.config_hash = j.at("config_hash").get<std::string>();
    c.method = j.at("method").get<std::string>();
    c.env_steps = j.at("env_steps").get<std::size_t>();
    PolicyParams& p = c.params;
    p.obs_dim = j.at("obs_dim").get<std::size_t>();
    p.num_agents = j.at("num_agents").get<std::size_t>();
    p.scale.center = j.at("scale").at("center").get<std::array<double, 2>>();
    p.scale.half_range = j.at("scale").at("half_range").get<std::array<double, 2>>();
    const auto ls = j.at("log_std").get<std::array<double, 2>>();
    p.log_std = Eigen::Vector2d(ls[0], ls[1]);
    p.actor = mlp_from(j.at("actor"));
    p.critic = mlp_from(j.at("critic"));
    if (p.actor.input_size() != static_cast<int>(p.obs_dim) || p.actor.output_size() != 2 ||
        p.critic.input_size() != static_cast<int>(p.critic_dim()) || p.critic.output_size() != 1)
      throw ConfigError("checkpoint: network shapes do not match obs_dim and num_agents");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFileError("cannot write " + path);
  out << serialize_checkpoint(checkpoint);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open checkpoint " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return deserialize_checkpoint(text.str());
}

}  // namespace cbfmarl::marl

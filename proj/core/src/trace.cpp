#include "cbfmarl/trace.hpp"

#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "cbfmarl/errors.hpp"

namespace cbfmarl {

using nlohmann::json;

namespace {

EventKind parse_event_kind(const std::string& s) {
  if (s == "exit") return EventKind::kExit;
  if (s == "collision_vehicle") return EventKind::kVehicleCollision;
  if (s == "collision_road") return EventKind::kRoadCollision;
  throw ConfigError("trace: unknown event kind '" + s + "'");
}

json vehicle_json(const TraceVehicle& v) {
  json j = {{"x", v.state.x},         {"y", v.state.y},   {"theta", v.state.theta}, {"v", v.state.v},
            {"delta", v.state.delta}, {"route", v.route}, {"u", {v.action.accel, v.action.steering_rate}},
            {"accel", v.accel},       {"jerk", v.jerk},   {"reward", v.reward}};
  if (v.has_filter) {
    j["filter"] = {{"u", {v.filtered.accel, v.filtered.steering_rate}},
                   {"correction", v.correction},
                   {"normalized_correction", v.normalized_correction},
                   {"feasible", v.feasible}};
  }
  return j;
}

TraceVehicle vehicle_from(const json& j) {
  TraceVehicle v;
  v.state = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>(), j.at("v").get<double>(),
             j.at("delta").get<double>()};
  v.route = j.at("route").get<std::size_t>();
  v.action = {j.at("u").at(0).get<double>(), j.at("u").at(1).get<double>()};
  v.accel = j.at("accel").get<double>();
  v.jerk = j.at("jerk").get<double>();
  v.reward = j.at("reward").get<double>();
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    v.has_filter = true;
    v.filtered = {f.at("u").at(0).get<double>(), f.at("u").at(1).get<double>()};
    v.correction = f.at("correction").get<double>();
    v.normalized_correction = f.at("normalized_correction").get<double>();
    v.feasible = f.at("feasible").get<bool>();
  }
  return v;
}

}  // namespace

void write_trace(std::ostream& out, const Trace& trace) {
  const json header = {{"type", "header"},
                       {"seed", trace.seed},
                       {"num_agents", trace.num_agents},
                       {"dt", trace.dt},
                       {"body_length", trace.body_length},
                       {"body_width", trace.body_width},
                       {"method", trace.method},
                       {"config_hash", trace.config_hash},
                       {"steps", trace.steps.size()}};
  out << header.dump() << '\n';
  for (const auto& s : trace.steps) {
    json vehicles = json::array();
    for (const auto& v : s.vehicles) vehicles.push_back(vehicle_json(v));
    json events = json::array();
    for (const auto& e : s.events) {
      json agents = json::array();
      for (std::size_t a = 0; a < e.agent_count; ++a) agents.push_back(e.agents[a]);
      events.push_back({{"kind", std::string(to_string(e.kind))}, {"step", e.step}, {"agents", agents}});
    }
    out << json{{"type", "step"}, {"k", s.k}, {"vehicles", vehicles}, {"events", events}}.dump() << '\n';
  }
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  bool have_header = false;
  std::size_t declared = 0;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        trace.seed = j.at("seed").get<std::uint64_t>();
        trace.num_agents = j.at("num_agents").get<std::size_t>();
        trace.dt = j.at("dt").get<double>();
        trace.body_length = j.at("body_length").get<double>();
        trace.body_width = j.at("body_width").get<double>();
        trace.method = j.at("method").get<std::string>();
        trace.config_hash = j.at("config_hash").get<std::string>();
        declared = j.at("steps").get<std::size_t>();
        have_header = true;
        continue;
      }
      if (!have_header || type != "step") throw ConfigError("trace: expected a header before step records");
      TraceStep step;
      step.k = j.at("k").get<std::size_t>();
      for (const auto& v : j.at("vehicles")) step.vehicles.push_back(vehicle_from(v));
      if (step.vehicles.size() != trace.num_agents) throw ConfigError("trace: vehicle count differs from header");
      for (const auto& e : j.at("events")) {
        EpisodeEvent ev;
        ev.kind = parse_event_kind(e.at("kind").get<std::string>());
        ev.step = e.at("step").get<std::size_t>();
        const auto& agents = e.at("agents");
        ev.agent_count = agents.size();
        if (ev.agent_count < 1 || ev.agent_count > 2) throw ConfigError("trace: events involve one or two agents");
        for (std::size_t a = 0; a < ev.agent_count; ++a) ev.agents[a] = agents.at(a).get<AgentId>();
        if (ev.agent_count == 1) ev.agents[1] = ev.agents[0];
        step.events.push_back(ev);
      }
      trace.steps.push_back(std::move(step));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trace: ") + e.what());
  }
  if (!have_header) throw ConfigError("trace: missing header record");
  if (declared != trace.steps.size()) throw ConfigError("trace: step count differs from header");
  return trace;
}

void save_trace(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFileError("cannot write " + path);
  write_trace(out, trace);
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path);
  return read_trace(in);
}

}  // namespace cbfmarl

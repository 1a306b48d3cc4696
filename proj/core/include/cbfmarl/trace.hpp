#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbfmarl/world.hpp"

namespace cbfmarl {

/// One vehicle during one transition: the state at the start of the step,
/// the executed action, and what the step produced.
struct TraceVehicle {
  VehicleState state;
  std::size_t route = 0;
  ControlInput action;
  double accel = 0.0;  ///< realized during the step
  double jerk = 0.0;
  double reward = 0.0;

  bool has_filter = false;
  ControlInput filtered;
  double correction = 0.0;
  double normalized_correction = 0.0;
  bool feasible = true;
};

struct TraceStep {
  std::size_t k = 0;
  std::vector<TraceVehicle> vehicles;
  std::vector<EpisodeEvent> events;
};

struct Trace {
  std::uint64_t seed = 0;
  std::size_t num_agents = 0;
  double dt = 0.1;
  double body_length = 0.2;
  double body_width = 0.1;
  std::string method;
  std::string config_hash;
  std::vector<TraceStep> steps;
};

/// JSON lines: a header record followed by one record per step.
void write_trace(std::ostream& out, const Trace& trace);
/// Throws ConfigError on malformed input.
Trace read_trace(std::istream& in);

void save_trace(const std::string& path, const Trace& trace);
/// Throws MissingFileError when the file cannot be opened.
Trace load_trace(const std::string& path);

}  // namespace cbfmarl

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbfmarl/env.hpp"
#include "cbfmarl/eval.hpp"
#include "cbfmarl/marl/ppo.hpp"
#include "cbfmarl/sweep.hpp"

namespace cbfmarl {

inline constexpr const char* kToolVersion = "0.3.0";

struct RunConfig {
  EnvConfig env;
  marl::PpoConfig ppo;
  EvalConfig eval;
  SweepGrids sweep;
  std::string out = "runs";
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses a JSON document. Missing keys keep their defaults; unknown keys,
/// wrong types and invalid values throw ConfigError.
RunConfig parse_run_config(const std::string& json_text);
/// Throws MissingFileError when the file cannot be read.
RunConfig load_run_config(const std::string& path);
/// Complete document with every field, so that parsing it yields `config`.
std::string dump_run_config(const RunConfig& config);

/// FNV-1a over the map, vehicle and environment sections: everything that
/// fixes observation and action shapes and the simulated world.
std::string config_hash(const RunConfig& config);

}  // namespace cbfmarl

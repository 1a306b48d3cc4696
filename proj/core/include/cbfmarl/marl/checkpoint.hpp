#pragma once

#include <cstddef>
#include <string>

#include "cbfmarl/marl/policy.hpp"

namespace cbfmarl::marl {

struct Checkpoint {
  PolicyParams params;
  std::string config_hash;
  std::string method;
  std::size_t env_steps = 0;
};

/// Versioned JSON dump; doubles round-trip exactly.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws ConfigError on malformed or inconsistent content.
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
/// Throws MissingFileError when the file cannot be opened.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cbfmarl::marl

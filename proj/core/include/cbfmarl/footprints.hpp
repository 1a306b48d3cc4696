#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cbfmarl/collision.hpp"
#include "cbfmarl/intersection.hpp"
#include "cbfmarl/trace.hpp"

namespace cbfmarl {

struct Footprint {
  AgentId agent = 0;
  std::size_t k = 0;
  double time = 0.0;
  Rectangle corners{};
};

struct FootprintDoc {
  std::size_t begin = 0;
  std::size_t end = 0;
  double dt = 0.1;
  std::size_t num_agents = 0;
  std::vector<Footprint> outlines;  ///< ordered by step, then agent
};

/// Rectangle outlines of every vehicle for trace steps [begin, end), with the
/// window clipped to the trace.
FootprintDoc export_footprints(const Trace& trace, std::size_t begin, std::size_t end);

/// Outlines colored by agent, later steps drawn more opaque, with start and
/// end times per agent. Road boundaries are drawn when `map` is given.
std::string footprints_svg(const FootprintDoc& doc, const IntersectionMap* map);
void write_footprints_csv(std::ostream& out, const FootprintDoc& doc);

/// Stroke color for an agent.
std::string agent_color(AgentId agent);

}  // namespace cbfmarl

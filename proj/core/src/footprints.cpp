#include "cbfmarl/footprints.hpp"

#include <algorithm>
#include <array>
#include <fmt/format.h>
#include <limits>
#include <ostream>

namespace cbfmarl {

FootprintDoc export_footprints(const Trace& trace, std::size_t begin, std::size_t end) {
  FootprintDoc doc;
  doc.dt = trace.dt;
  doc.num_agents = trace.num_agents;
  doc.end = std::min(end, trace.steps.size());
  doc.begin = std::min(begin, doc.end);
  for (std::size_t s = doc.begin; s < doc.end; ++s) {
    const TraceStep& step = trace.steps[s];
    for (AgentId i = 0; i < step.vehicles.size(); ++i) {
      doc.outlines.push_back({i, step.k, static_cast<double>(step.k) * trace.dt,
                              rectangle_corners(step.vehicles[i].state, trace.body_length, trace.body_width)});
    }
  }
  return doc;
}

std::string agent_color(AgentId agent) {
  static constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kPalette[agent % kPalette.size()];
}

namespace {

std::string polyline_points(const std::vector<Point2>& pts) {
  std::string s;
  for (const auto& p : pts) s += fmt::format("{:.4f},{:.4f} ", p.x, -p.y);
  return s;
}

}  // namespace

std::string footprints_svg(const FootprintDoc& doc, const IntersectionMap* map) {
  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  auto grow = [&](const Point2& p) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  };
  if (map) {
    for (const auto& r : map->routes) {
      for (const auto& p : r.left.vertices()) grow(p);
      for (const auto& p : r.right.vertices()) grow(p);
    }
  }
  for (const auto& f : doc.outlines)
    for (const auto& c : f.corners) grow(c);
  if (!std::isfinite(lo_x)) lo_x = lo_y = -1.0, hi_x = hi_y = 1.0;
  const double pad = 0.1;
  const double w = hi_x - lo_x + 2 * pad;
  const double h = hi_y - lo_y + 2 * pad;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.4f} {:.4f} {:.4f} {:.4f}\" width=\"800\" "
      "height=\"{:.0f}\">\n<rect x=\"{:.4f}\" y=\"{:.4f}\" width=\"{:.4f}\" height=\"{:.4f}\" fill=\"white\"/>\n",
      lo_x - pad, -hi_y - pad, w, h, 800.0 * h / w, lo_x - pad, -hi_y - pad, w, h);
  if (map) {
    svg += "<g fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.004\">\n";
    for (const auto& r : map->routes) {
      svg += "<polyline points=\"" + polyline_points(r.left.vertices()) + "\"/>\n";
      svg += "<polyline points=\"" + polyline_points(r.right.vertices()) + "\"/>\n";
    }
    svg += "</g>\n";
  }

  const double span = std::max<double>(1.0, static_cast<double>(doc.end - doc.begin));
  std::vector<const Footprint*> first(doc.num_agents, nullptr);
  std::vector<const Footprint*> last(doc.num_agents, nullptr);
  svg += "<g fill=\"none\" stroke-width=\"0.004\">\n";
  for (const auto& f : doc.outlines) {
    const double age = (static_cast<double>(f.k) - static_cast<double>(doc.begin) + 1.0) / span;
    std::vector<Point2> ring(f.corners.begin(), f.corners.end());
    svg += fmt::format("<polygon points=\"{}\" stroke=\"{}\" stroke-opacity=\"{:.3f}\"/>\n", polyline_points(ring),
                       agent_color(f.agent), 0.15 + 0.85 * std::clamp(age, 0.0, 1.0));
    if (f.agent < doc.num_agents) {
      if (!first[f.agent]) first[f.agent] = &f;
      last[f.agent] = &f;
    }
  }
  svg += "</g>\n<g font-size=\"0.05\" font-family=\"sans-serif\">\n";
  for (AgentId i = 0; i < doc.num_agents; ++i) {
    if (!first[i]) continue;
    for (const Footprint* f : {first[i], last[i]}) {
      Point2 c{0.0, 0.0};
      for (const auto& p : f->corners) c = c + p * 0.25;
      svg += fmt::format("<text x=\"{:.4f}\" y=\"{:.4f}\" fill=\"{}\">{} t={:.1f}s</text>\n", c.x + 0.06, -c.y,
                         agent_color(i), i, f->time);
    }
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

void write_footprints_csv(std::ostream& out, const FootprintDoc& doc) {
  out << "agent,k,time,x0,y0,x1,y1,x2,y2,x3,y3\n";
  for (const auto& f : doc.outlines) {
    out << fmt::format("{},{},{}", f.agent, f.k, f.time);
    for (const auto& c : f.corners) out << fmt::format(",{},{}", c.x, c.y);
    out << '\n';
  }
}

}  // namespace cbfmarl

#include "cbfmarl/intersection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cbfmarl/dynamics.hpp"

namespace cbfmarl {

std::string_view to_string(Region r) {
  switch (r) {
    case Region::kSouth: return "S";
    case Region::kEast: return "E";
    case Region::kNorth: return "N";
    case Region::kWest: return "W";
  }
  return "?";
}

std::string_view to_string(Maneuver m) {
  switch (m) {
    case Maneuver::kLeft: return "left";
    case Maneuver::kStraight: return "straight";
    case Maneuver::kRight: return "right";
  }
  return "?";
}

Point2 ReferencePath::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(arclength.begin(), arclength.end(), s);
  std::size_t k = it == arclength.begin() ? 0 : static_cast<std::size_t>(it - arclength.begin()) - 1;
  if (k + 1 >= waypoints.size()) return waypoints.back();
  const double seg = arclength[k + 1] - arclength[k];
  const double t = (s - arclength[k]) / seg;
  return waypoints[k] + t * (waypoints[k + 1] - waypoints[k]);
}

double ReferencePath::heading_at(double s) const {
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(arclength.begin(), arclength.end(), s);
  std::size_t k = it == arclength.begin() ? 0 : static_cast<std::size_t>(it - arclength.begin()) - 1;
  k = std::min(k, waypoints.size() - 2);
  const Point2 d = waypoints[k + 1] - waypoints[k];
  return std::atan2(d.y, d.x);
}

PathProjection project_onto_path(const ReferencePath& path, const Point2& p) {
  PathProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  const auto& w = path.waypoints;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const Point2 d = w[k + 1] - w[k];
    const double len2 = dot(d, d);
    const double t = std::clamp(dot(p - w[k], d) / len2, 0.0, 1.0);
    const Point2 q = w[k] + t * d;
    const double dist = distance(p, q);
    if (dist < best.distance) {
      best.distance = dist;
      best.segment = k;
      best.point = q;
      best.arclength = path.arclength[k] + t * (path.arclength[k + 1] - path.arclength[k]);
    }
  }
  return best;
}

std::vector<Point2> sample_reference_points(const ReferencePath& path, const Point2& p, std::size_t count,
                                            double spacing) {
  if (count < 1) throw std::invalid_argument("sample_reference_points: count must be at least 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("sample_reference_points: spacing must be positive");
  const double s0 = project_onto_path(path, p).arclength;
  std::vector<Point2> out;
  out.reserve(count);
  for (std::size_t m = 1; m <= count; ++m) out.push_back(path.point_at(s0 + static_cast<double>(m) * spacing));
  return out;
}

namespace {

class PathBuilder {
 public:
  PathBuilder(Point2 start, double heading) {
    points_.push_back(start);
    headings_.push_back(heading);
  }

  void straight(double length) {
    if (length <= 0.0) return;
    const double h = headings_.back();
    points_.push_back(points_.back() + length * Point2{std::cos(h), std::sin(h)});
    headings_.push_back(h);
  }

  // Positive sweep turns left.
  void arc(double radius, double sweep, double max_step) {
    const double h0 = headings_.back();
    const double turn = sweep > 0.0 ? 1.0 : -1.0;
    const Point2 center = points_.back() + turn * radius * left_normal({std::cos(h0), std::sin(h0)});
    const int n = static_cast<int>(std::ceil(std::abs(sweep) / max_step - 1e-12));
    const Point2 r0 = points_.back() - center;
    for (int k = 1; k <= n; ++k) {
      const double a = sweep * k / n;
      points_.push_back(center + rotate(r0, a));
      headings_.push_back(h0 + a);
    }
  }

  ReferencePath finish() && {
    ReferencePath path;
    path.waypoints = std::move(points_);
    path.heading = std::move(headings_);
    path.arclength.resize(path.waypoints.size());
    path.arclength[0] = 0.0;
    for (std::size_t k = 1; k < path.waypoints.size(); ++k)
      path.arclength[k] = path.arclength[k - 1] + distance(path.waypoints[k - 1], path.waypoints[k]);
    return path;
  }

 private:
  std::vector<Point2> points_;
  std::vector<double> headings_;
};

Route make_route(ReferencePath path, double lane_width) {
  std::vector<Point2> left;
  std::vector<Point2> right;
  left.reserve(path.waypoints.size());
  right.reserve(path.waypoints.size());
  for (std::size_t k = 0; k < path.waypoints.size(); ++k) {
    const Point2 n{-std::sin(path.heading[k]), std::cos(path.heading[k])};
    left.push_back(path.waypoints[k] + 0.5 * lane_width * n);
    right.push_back(path.waypoints[k] - 0.5 * lane_width * n);
  }
  Route route;
  route.left = Polyline(std::move(left), CorridorSide::kRight);
  route.right = Polyline(std::move(right), CorridorSide::kLeft);
  route.path = std::move(path);
  return route;
}

Route rotate_route(const Route& r, int k) {
  ReferencePath p = r.path;
  for (auto& w : p.waypoints) w = rotate_quarter_turns(w, k);
  for (auto& h : p.heading) h = wrap_angle(h + k * 0.5 * std::numbers::pi);
  p.entry = static_cast<Region>((static_cast<int>(p.entry) + k) % 4);
  p.exit = static_cast<Region>((static_cast<int>(p.exit) + k) % 4);
  auto rot = [k](const Polyline& l) {
    std::vector<Point2> v = l.vertices();
    for (auto& w : v) w = rotate_quarter_turns(w, k);
    return Polyline(std::move(v), l.corridor_side());
  };
  return Route{std::move(p), rot(r.left), rot(r.right)};
}

AxisRect rotate_rect(const AxisRect& r, int k) {
  const Point2 a = rotate_quarter_turns(r.min, k);
  const Point2 b = rotate_quarter_turns(r.max, k);
  return {{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
}

void validate(const MapConfig& c) {
  if (!(c.lane_width > 0.0)) throw std::invalid_argument("map: lane_width must be positive");
  if (c.lanes_per_direction < 1) throw std::invalid_argument("map: need at least one lane per direction");
  if (!(c.arm_length > 0.0)) throw std::invalid_argument("map: arm_length must be positive");
  if (!(c.entry_length > 0.0) || !(c.exit_length > 0.0))
    throw std::invalid_argument("map: entry and exit lengths must be positive");
  if (!(c.max_arc_step_deg > 0.0 && c.max_arc_step_deg <= 5.0))
    throw std::invalid_argument("map: max_arc_step_deg must lie in (0, 5]");
  if (c.left_turn_radius < c.lane_width || c.right_turn_radius < c.lane_width)
    throw std::invalid_argument("map: turn radius below lane width");
}

}  // namespace

IntersectionMap build_intersection(const MapConfig& config) {
  validate(config);
  const double w = config.lane_width;
  const double half = config.lanes_per_direction * w;
  const double far = half + config.arm_length;
  const double x_inner = 0.5 * w;
  const double x_outer = (config.lanes_per_direction - 0.5) * w;
  const double step = config.max_arc_step_deg * std::numbers::pi / 180.0;
  const double north = 0.5 * std::numbers::pi;

  // South arm, driving north.
  const double r_left = config.left_turn_radius;
  const double left_in = x_inner - r_left + far;
  const double left_out = far + x_inner - r_left;
  const double r_right = config.right_turn_radius;
  const double right_in = far - x_outer - r_right;
  const double right_out = far - x_outer - r_right;
  if (left_in < config.entry_length || left_out < config.exit_length)
    throw std::invalid_argument("map: left turn does not fit between entry and exit regions");
  if (right_in < config.entry_length || right_out < config.exit_length)
    throw std::invalid_argument("map: right turn does not fit between entry and exit regions");
  if (config.entry_length + config.exit_length > config.arm_length)
    throw std::invalid_argument("map: entry and exit regions exceed the arm length");

  std::array<Route, 3> south;
  {
    PathBuilder b({x_inner, -far}, north);
    b.straight(left_in);
    b.arc(r_left, north, step);
    b.straight(left_out);
    auto p = std::move(b).finish();
    p.maneuver = Maneuver::kLeft;
    p.exit = Region::kWest;
    south[0] = make_route(std::move(p), w);
  }
  {
    PathBuilder b({x_outer, -far}, north);
    b.straight(2.0 * far);
    auto p = std::move(b).finish();
    p.maneuver = Maneuver::kStraight;
    p.exit = Region::kNorth;
    south[1] = make_route(std::move(p), w);
  }
  {
    PathBuilder b({x_outer, -far}, north);
    b.straight(right_in);
    b.arc(r_right, -north, step);
    b.straight(right_out);
    auto p = std::move(b).finish();
    p.maneuver = Maneuver::kRight;
    p.exit = Region::kEast;
    south[2] = make_route(std::move(p), w);
  }
  for (auto& r : south) r.path.entry = Region::kSouth;

  const AxisRect entry{{0.0, -far}, {half, -far + config.entry_length}};
  const AxisRect exit{{-half, -far - config.exit_length}, {0.0, -far + config.exit_length}};

  IntersectionMap map;
  map.config = config;
  for (int k = 0; k < 4; ++k) {
    map.entry_regions[static_cast<std::size_t>(k)] = rotate_rect(entry, k);
    map.exit_regions[static_cast<std::size_t>(k)] = rotate_rect(exit, k);
    for (const auto& r : south) map.routes.push_back(rotate_route(r, k));
  }
  return map;
}

}  // namespace cbfmarl

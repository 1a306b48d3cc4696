#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "cbfmarl/geometry.hpp"

namespace cbfmarl {

/// Arms of the four-way intersection. Enumerator order is the order of
/// counter-clockwise quarter turns starting from the south arm.
enum class Region { kSouth = 0, kEast = 1, kNorth = 2, kWest = 3 };
enum class Maneuver { kLeft, kStraight, kRight };

std::string_view to_string(Region r);
std::string_view to_string(Maneuver m);

struct ReferencePath {
  std::vector<Point2> waypoints;
  std::vector<double> arclength;  ///< cumulative, starts at 0
  std::vector<double> heading;    ///< tangent heading at each waypoint
  Region entry = Region::kSouth;
  Region exit = Region::kNorth;
  Maneuver maneuver = Maneuver::kStraight;

  double length() const { return arclength.back(); }
  Point2 point_at(double s) const;
  double heading_at(double s) const;
};

struct PathProjection {
  double arclength = 0.0;
  std::size_t segment = 0;
  Point2 point;
  double distance = 0.0;
};

/// Nearest point on the path; ties between segments go to the lower index.
PathProjection project_onto_path(const ReferencePath& path, const Point2& p);

/// Points at arclength s* + m * spacing (m = 1..count), clamped to the path
/// end, where s* is the projection of `p`.
std::vector<Point2> sample_reference_points(const ReferencePath& path, const Point2& p,
                                            std::size_t count, double spacing);

/// A reference path with the two boundaries of its drivable corridor.
struct Route {
  ReferencePath path;
  Polyline left;   ///< corridor lies on its right
  Polyline right;  ///< corridor lies on its left
};

struct MapConfig {
  double lane_width = 0.3;
  int lanes_per_direction = 2;
  double arm_length = 1.5;
  double left_turn_radius = 0.75;
  double right_turn_radius = 0.3;
  double entry_length = 1.0;
  double exit_length = 0.5;
  double max_arc_step_deg = 5.0;

  friend bool operator==(const MapConfig&, const MapConfig&) = default;
};

struct IntersectionMap {
  MapConfig config;
  std::array<AxisRect, 4> entry_regions;
  std::array<AxisRect, 4> exit_regions;
  /// Twelve routes; route 3 * arm + maneuver index (left, straight, right).
  std::vector<Route> routes;

  double lane_width() const { return config.lane_width; }
  const Route& route(std::size_t id) const { return routes.at(id); }
  /// Route id for the given entry arm and maneuver.
  static std::size_t route_id(Region entry, Maneuver m) {
    return 3 * static_cast<std::size_t>(entry) + static_cast<std::size_t>(m);
  }
};

/// Builds the map by constructing the south arm and rotating it by quarter
/// turns. Throws std::invalid_argument for infeasible configurations (turn
/// radius below the lane width, turns that do not fit inside the arms).
IntersectionMap build_intersection(const MapConfig& config);

}  // namespace cbfmarl

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cbfmarl {

struct VehicleState;

/// A point (or displacement) in the planar workspace, in meters.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2& operator+=(const Point2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Point2& operator-=(const Point2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr Point2 operator+(Point2 a, const Point2& b) { return a += b; }
  friend constexpr Point2 operator-(Point2 a, const Point2& b) { return a -= b; }
  friend constexpr Point2 operator*(double s, const Point2& p) { return {s * p.x, s * p.y}; }
  friend constexpr Point2 operator*(const Point2& p, double s) { return {s * p.x, s * p.y}; }
  friend constexpr Point2 operator-(const Point2& p) { return {-p.x, -p.y}; }
  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

constexpr double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Point2& a, const Point2& b) { return norm(a - b); }
/// Counter-clockwise quarter turn.
constexpr Point2 left_normal(const Point2& d) { return {-d.y, d.x}; }
/// Exact rotation by k quarter turns counter-clockwise.
Point2 rotate_quarter_turns(const Point2& p, int k);
Point2 rotate(const Point2& p, double angle);

/// Side of a polyline (relative to its traversal direction) on which the
/// drivable corridor lies.
enum class CorridorSide { kLeft, kRight };

class Polyline {
 public:
  Polyline() = default;
  /// Throws std::invalid_argument for fewer than two vertices, non-finite
  /// coordinates or zero-length segments.
  Polyline(std::vector<Point2> vertices, CorridorSide side);

  const std::vector<Point2>& vertices() const { return vertices_; }
  CorridorSide corridor_side() const { return side_; }
  std::size_t segment_count() const { return vertices_.size() - 1; }
  /// Unit normal of segment `k` pointing to the corridor side.
  Point2 corridor_normal(std::size_t k) const;

 private:
  std::vector<Point2> vertices_;
  CorridorSide side_ = CorridorSide::kLeft;
};

/// Result of a signed nearest-segment query.
struct PseudoDistance {
  double distance = 0.0;     ///< signed; positive on the corridor side
  std::size_t segment = 0;   ///< index of the active (nearest) segment
  double t = 0.0;            ///< projection parameter on that segment, clamped to [0, 1]
  bool at_vertex = false;    ///< nearest point is a segment endpoint
  Point2 closest;
};

/// Signed distance from `p` to the nearest segment of `line`. Ties between
/// segments resolve to the lower index. Points on the extension of a segment
/// (zero cross product) count as corridor side.
PseudoDistance pseudo_distance(const Point2& p, const Polyline& line);

/// Circles covering a rectangular vehicle footprint, placed along the body
/// x-axis.
struct CircleDecomposition {
  std::vector<double> offsets;  ///< longitudinal offsets in the body frame
  double radius = 0.0;
};

/// Evenly spaced circles with the minimal radius that covers the whole
/// rectangle: radius = sqrt((length / (2 n))^2 + (width / 2)^2).
CircleDecomposition decompose_rectangle(double length, double width, int n_cir);

std::vector<Point2> circle_centers(const VehicleState& state, const CircleDecomposition& decomp);

/// Corners of the vehicle rectangle centered at the state position, in
/// counter-clockwise order starting at rear-right.
std::array<Point2, 4> rectangle_corners(const VehicleState& state, double length, double width);

struct AxisRect {
  Point2 min;
  Point2 max;
  bool contains(const Point2& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

}  // namespace cbfmarl

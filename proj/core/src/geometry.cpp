#include "cbfmarl/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "cbfmarl/dynamics.hpp"

namespace cbfmarl {

Point2 rotate_quarter_turns(const Point2& p, int k) {
  Point2 r = p;
  for (int i = 0; i < ((k % 4) + 4) % 4; ++i) r = left_normal(r);
  return r;
}

Point2 rotate(const Point2& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

Polyline::Polyline(std::vector<Point2> vertices, CorridorSide side)
    : vertices_(std::move(vertices)), side_(side) {
  if (vertices_.size() < 2) throw std::invalid_argument("polyline needs at least two vertices");
  for (const auto& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw std::invalid_argument("polyline vertex is not finite");
  }
  for (std::size_t k = 0; k + 1 < vertices_.size(); ++k) {
    if (vertices_[k] == vertices_[k + 1]) throw std::invalid_argument("polyline has a zero-length segment");
  }
}

Point2 Polyline::corridor_normal(std::size_t k) const {
  const Point2 d = vertices_[k + 1] - vertices_[k];
  const Point2 n = left_normal(d) * (1.0 / norm(d));
  return side_ == CorridorSide::kLeft ? n : -n;
}

PseudoDistance pseudo_distance(const Point2& p, const Polyline& line) {
  const auto& v = line.vertices();
  PseudoDistance best;
  double best_unsigned = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const Point2 d = v[k + 1] - v[k];
    const double t_raw = dot(p - v[k], d) / dot(d, d);
    const double t = std::clamp(t_raw, 0.0, 1.0);
    const Point2 q = v[k] + t * d;
    const double dist = distance(p, q);
    if (dist < best_unsigned) {
      best_unsigned = dist;
      best.segment = k;
      best.t = t;
      best.at_vertex = t_raw <= 0.0 || t_raw >= 1.0;
      best.closest = q;
    }
  }
  const Point2 d = v[best.segment + 1] - v[best.segment];
  const double side = cross(d, p - v[best.segment]);
  const bool corridor_side = line.corridor_side() == CorridorSide::kLeft ? side >= 0.0 : side <= 0.0;
  best.distance = corridor_side ? best_unsigned : -best_unsigned;
  return best;
}

CircleDecomposition decompose_rectangle(double length, double width, int n_cir) {
  if (!(length > 0.0) || !(width > 0.0)) throw std::invalid_argument("rectangle dimensions must be positive");
  if (width > length) throw std::invalid_argument("rectangle width exceeds its length");
  if (n_cir < 1) throw std::invalid_argument("need at least one circle");
  CircleDecomposition out;
  const double spacing = length / n_cir;
  out.offsets.reserve(static_cast<std::size_t>(n_cir));
  for (int k = 0; k < n_cir; ++k) out.offsets.push_back(-0.5 * length + spacing * (k + 0.5));
  out.radius = std::hypot(0.5 * spacing, 0.5 * width);
  return out;
}

std::vector<Point2> circle_centers(const VehicleState& state, const CircleDecomposition& decomp) {
  const Point2 dir{std::cos(state.theta), std::sin(state.theta)};
  std::vector<Point2> out;
  out.reserve(decomp.offsets.size());
  for (double o : decomp.offsets) out.push_back(Point2{state.x, state.y} + o * dir);
  return out;
}

std::array<Point2, 4> rectangle_corners(const VehicleState& state, double length, double width) {
  const Point2 c{state.x, state.y};
  const Point2 f{std::cos(state.theta), std::sin(state.theta)};
  const Point2 l = left_normal(f);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  return {c - hl * f - hw * l, c + hl * f - hw * l, c + hl * f + hw * l, c - hl * f + hw * l};
}

}  // namespace cbfmarl

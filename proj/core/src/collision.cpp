#include "cbfmarl/collision.hpp"

#include <algorithm>
#include <limits>

namespace cbfmarl {

namespace {

bool separated_along(const Rectangle& a, const Rectangle& b, const Point2& axis) {
  double amin = std::numeric_limits<double>::infinity();
  double amax = -amin;
  double bmin = amin;
  double bmax = -amin;
  for (const auto& p : a) {
    const double s = dot(p, axis);
    amin = std::min(amin, s);
    amax = std::max(amax, s);
  }
  for (const auto& p : b) {
    const double s = dot(p, axis);
    bmin = std::min(bmin, s);
    bmax = std::max(bmax, s);
  }
  return amax < bmin || bmax < amin;
}

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

bool rectangles_overlap(const Rectangle& a, const Rectangle& b) {
  for (const Rectangle* r : {&a, &b}) {
    for (std::size_t k = 0; k < 2; ++k) {
      const Point2 axis = left_normal((*r)[k + 1] - (*r)[k]);
      if (separated_along(a, b, axis)) return false;
    }
  }
  return true;
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool rectangle_hits_polyline(const Rectangle& rect, const Polyline& line) {
  double xmin = rect[0].x, xmax = rect[0].x, ymin = rect[0].y, ymax = rect[0].y;
  for (const auto& p : rect) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const auto& v = line.vertices();
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const Point2& a = v[k];
    const Point2& b = v[k + 1];
    if (std::max(a.x, b.x) < xmin || std::min(a.x, b.x) > xmax || std::max(a.y, b.y) < ymin ||
        std::min(a.y, b.y) > ymax)
      continue;
    for (std::size_t e = 0; e < 4; ++e) {
      if (segments_intersect(rect[e], rect[(e + 1) % 4], a, b)) return true;
    }
  }
  return false;
}

}  // namespace cbfmarl

#pragma once

#include <array>
#include <span>

#include "cbfmarl/geometry.hpp"

namespace cbfmarl {

using Rectangle = std::array<Point2, 4>;

/// Separating-axis test on two convex quadrilaterals. Touching counts as an
/// overlap.
bool rectangles_overlap(const Rectangle& a, const Rectangle& b);

/// Closed segment intersection, including collinear overlap.
bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2);

/// True when any rectangle edge touches any segment of the polyline.
bool rectangle_hits_polyline(const Rectangle& rect, const Polyline& line);

}  // namespace cbfmarl

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "scenegen/graph/scene.hpp"

namespace scenegen::graph {

using Point2 = std::array<double, 2>;
using Polygon2 = std::vector<Point2>;

double polygon_area(const Polygon2& p);

/// Sutherland-Hodgman clip of a convex polygon against another convex polygon
/// given in counter-clockwise order.
Polygon2 clip_convex(const Polygon2& subject, const Polygon2& clip);

/// Minimal distance between two convex polygons (0 when they intersect).
double polygon_distance(const Polygon2& a, const Polygon2& b);

/// Intersection area of the two boxes' footprints (yaw-aware).
double footprint_intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Fraction of the smaller footprint covered by the intersection, in [0,1].
double footprint_overlap_fraction(const BoundingBox& a, const BoundingBox& b);

/// Minimal face-to-face distance between two z-aligned oriented boxes:
/// sqrt(xy-footprint distance^2 + z-interval gap^2).
double box_gap(const BoundingBox& a, const BoundingBox& b);

/// Exact IoU of two z-aligned oriented boxes (prism intersection via 2-D
/// polygon clipping times the z-interval overlap).
double box_iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace scenegen::graph

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/graph/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace scenegen::graph {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double segment_distance(const Point2& a0, const Point2& a1, const Point2& b0, const Point2& b1) {
    auto point_seg = [](const Point2& p, const Point2& s0, const Point2& s1) {
        double vx = s1[0] - s0[0], vy = s1[1] - s0[1];
        double wx = p[0] - s0[0], wy = p[1] - s0[1];
        double vv = vx * vx + vy * vy;
        double t = vv > 0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
        double dx = wx - t * vx, dy = wy - t * vy;
        return std::sqrt(dx * dx + dy * dy);
    };
    // proper intersection check
    double d1 = cross(a0, a1, b0), d2 = cross(a0, a1, b1);
    double d3 = cross(b0, b1, a0), d4 = cross(b0, b1, a1);
    if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return 0.0;
    return std::min({point_seg(b0, a0, a1), point_seg(b1, a0, a1), point_seg(a0, b0, b1),
                     point_seg(a1, b0, b1)});
}

bool point_in_convex(const Point2& p, const Polygon2& poly) {
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        if (cross(poly[i], poly[(i + 1) % n], p) < -1e-12) return false;
    }
    return true;
}

}  // namespace

double polygon_area(const Polygon2& p) {
    double a = 0;
    size_t n = p.size();
    for (size_t i = 0; i < n; ++i) {
        const Point2& u = p[i];
        const Point2& v = p[(i + 1) % n];
        a += u[0] * v[1] - v[0] * u[1];
    }
    return 0.5 * std::fabs(a);
}

Polygon2 clip_convex(const Polygon2& subject, const Polygon2& clip) {
    Polygon2 out = subject;
    size_t n = clip.size();
    for (size_t i = 0; i < n && !out.empty(); ++i) {
        const Point2& c0 = clip[i];
        const Point2& c1 = clip[(i + 1) % n];
        Polygon2 input = std::move(out);
        out.clear();
        size_t m = input.size();
        for (size_t j = 0; j < m; ++j) {
            const Point2& cur = input[j];
            const Point2& nxt = input[(j + 1) % m];
            double dc = cross(c0, c1, cur);
            double dn = cross(c0, c1, nxt);
            bool cur_in = dc >= 0, nxt_in = dn >= 0;
            if (cur_in) out.push_back(cur);
            if (cur_in != nxt_in) {
                double t = dc / (dc - dn);
                out.push_back({cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])});
            }
        }
    }
    return out;
}

double polygon_distance(const Polygon2& a, const Polygon2& b) {
    for (const auto& p : a)
        if (point_in_convex(p, b)) return 0.0;
    for (const auto& p : b)
        if (point_in_convex(p, a)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    size_t na = a.size(), nb = b.size();
    for (size_t i = 0; i < na; ++i)
        for (size_t j = 0; j < nb; ++j)
            best = std::min(best, segment_distance(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]));
    return best;
}

namespace {
Polygon2 footprint_poly(const BoundingBox& b) {
    auto f = b.footprint();
    return Polygon2(f.begin(), f.end());
}
}  // namespace

double footprint_intersection_area(const BoundingBox& a, const BoundingBox& b) {
    return polygon_area(clip_convex(footprint_poly(a), footprint_poly(b)));
}

double footprint_overlap_fraction(const BoundingBox& a, const BoundingBox& b) {
    double inter = footprint_intersection_area(a, b);
    double smaller = std::min(a.size[0] * a.size[1], b.size[0] * b.size[1]);
    return smaller > 0 ? std::min(1.0, inter / smaller) : 0.0;
}

double box_gap(const BoundingBox& a, const BoundingBox& b) {
    double dxy = polygon_distance(footprint_poly(a), footprint_poly(b));
    double dz = std::max({0.0, a.bottom() - b.top(), b.bottom() - a.top()});
    return std::sqrt(dxy * dxy + dz * dz);
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
    double inter_xy = footprint_intersection_area(a, b);
    double dz = std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom());
    double inter = inter_xy * std::max(0.0, dz);
    double uni = a.volume() + b.volume() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

}  // namespace scenegen::graph

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/annotate/relation_rules.hpp"

#include <cmath>
#include <fstream>

#include "scenegen/core/error.hpp"
#include "scenegen/graph/geometry.hpp"

namespace scenegen::annotate {

using graph::BoundingBox;

void RelationThresholds::validate() const {
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(closeby_max_gap) || !finite_nonneg(above_min_overlap) ||
        !finite_nonneg(standing_on_max_gap) || !finite_nonneg(height_diff_min) ||
        !finite_nonneg(lateral_margin) || !finite_nonneg(mirror_tolerance) ||
        !finite_nonneg(size_match_tolerance))
        throw ConfigError("relation thresholds must be finite and nonnegative");
    if (!(volume_ratio_min > 1.0)) throw ConfigError("volume_ratio_min must be > 1");
}

nlohmann::json RelationThresholds::to_json() const {
    return {{"closeby_max_gap", closeby_max_gap},
            {"above_min_overlap", above_min_overlap},
            {"standing_on_max_gap", standing_on_max_gap},
            {"volume_ratio_min", volume_ratio_min},
            {"height_diff_min", height_diff_min},
            {"lateral_margin", lateral_margin},
            {"mirror_tolerance", mirror_tolerance},
            {"size_match_tolerance", size_match_tolerance}};
}

RelationThresholds RelationThresholds::from_json(const nlohmann::json& j) {
    RelationThresholds t;
    t.closeby_max_gap = j.value("closeby_max_gap", t.closeby_max_gap);
    t.above_min_overlap = j.value("above_min_overlap", t.above_min_overlap);
    t.standing_on_max_gap = j.value("standing_on_max_gap", t.standing_on_max_gap);
    t.volume_ratio_min = j.value("volume_ratio_min", t.volume_ratio_min);
    t.height_diff_min = j.value("height_diff_min", t.height_diff_min);
    t.lateral_margin = j.value("lateral_margin", t.lateral_margin);
    t.mirror_tolerance = j.value("mirror_tolerance", t.mirror_tolerance);
    t.size_match_tolerance = j.value("size_match_tolerance", t.size_match_tolerance);
    t.validate();
    return t;
}

RelationThresholds RelationThresholds::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open thresholds file: " + path);
    return from_json(nlohmann::json::parse(f));
}

void require_valid_box(const BoundingBox& b, int node_id) {
    for (double s : b.size)
        if (!(s > 0.0) || !std::isfinite(s))
            throw NumericError("degenerate box on node " + std::to_string(node_id));
    for (double t : b.translation)
        if (!std::isfinite(t))
            throw NumericError("non-finite translation on node " + std::to_string(node_id));
}

namespace {

bool above_holds(const BoundingBox& a, const BoundingBox& b, const RelationThresholds& th) {
    if (a.bottom() < b.top() - 1e-9) return false;
    return graph::footprint_overlap_fraction(a, b) >= th.above_min_overlap;
}

bool symmetrical_holds(const BoundingBox& a, const BoundingBox& b,
                       const RelationThresholds& th) {
    // Mirror test: the separation between centroids must align with a room
    // axis (off-axis residual within tolerance), sizes must match per
    // component within the relative tolerance.
    double dx = b.translation[0] - a.translation[0];
    double dy = b.translation[1] - a.translation[1];
    double dz = b.translation[2] - a.translation[2];
    double residual =
        std::fabs(dx) >= std::fabs(dy) ? std::hypot(dy, dz) : std::hypot(dx, dz);
    if (residual > th.mirror_tolerance) return false;
    for (int k = 0; k < 3; ++k) {
        double lo = std::min(a.size[k], b.size[k]);
        double hi = std::max(a.size[k], b.size[k]);
        if (hi - lo > th.size_match_tolerance * hi) return false;
    }
    return true;
}

}  // namespace

bool relation_holds(int predicate_id, const BoundingBox& src, const BoundingBox& dst,
                    const RelationThresholds& th, const graph::Vocabulary& vocab) {
    const std::string& name = vocab.predicate(predicate_id).name;
    if (name == "left") return src.translation[0] < dst.translation[0] - th.lateral_margin;
    if (name == "right") return src.translation[0] > dst.translation[0] + th.lateral_margin;
    if (name == "front") return src.translation[1] < dst.translation[1] - th.lateral_margin;
    if (name == "behind") return src.translation[1] > dst.translation[1] + th.lateral_margin;
    if (name == "bigger") return src.volume() >= th.volume_ratio_min * dst.volume();
    if (name == "smaller") return dst.volume() >= th.volume_ratio_min * src.volume();
    if (name == "lower") return src.top() <= dst.top() - th.height_diff_min;
    if (name == "higher") return src.top() >= dst.top() + th.height_diff_min;
    if (name == "close_by") return graph::box_gap(src, dst) <= th.closeby_max_gap;
    if (name == "above") return above_holds(src, dst, th);
    if (name == "standing_on")
        return above_holds(src, dst, th) && src.bottom() - dst.top() <= th.standing_on_max_gap;
    if (name == "symmetrical") return symmetrical_holds(src, dst, th);
    throw VocabularyError("relation_holds: predicate '" + name + "' is not geometric");
}

bool style_relation_holds(int predicate_id, const graph::StyleAttributes& src,
                          const graph::StyleAttributes& dst, const graph::Vocabulary& vocab) {
    const std::string& name = vocab.predicate(predicate_id).name;
    if (name == "same_material") return !src.material.empty() && src.material == dst.material;
    if (name == "same_shape") return !src.shape.empty() && src.shape == dst.shape;
    if (name == "same_super_category")
        return !src.super_category.empty() && src.super_category == dst.super_category;
    throw VocabularyError("style_relation_holds: predicate '" + name + "' is not style-based");
}

}  // namespace scenegen::annotate

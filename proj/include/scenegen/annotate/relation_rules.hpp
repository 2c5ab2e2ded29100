// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "scenegen/graph/scene.hpp"

namespace scenegen::annotate {

/// Geometric decision thresholds shared by the annotator and the constraint
/// evaluator; keeping one rule engine is what makes the round-trip property
/// exact.
struct RelationThresholds {
    double closeby_max_gap = 0.45;     // meters
    double above_min_overlap = 0.30;   // fraction of the smaller footprint
    double standing_on_max_gap = 0.05; // meters
    double volume_ratio_min = 1.25;    // bigger/smaller trigger ratio
    double height_diff_min = 0.15;     // meters, on top heights
    double lateral_margin = 0.05;      // meters, left/right & front/behind dead zone

    // symmetrical is evaluation-only; see check_constraint
    double mirror_tolerance = 0.10;    // meters
    double size_match_tolerance = 0.10;  // relative, per size component

    void validate() const;
    nlohmann::json to_json() const;
    static RelationThresholds from_json(const nlohmann::json& j);
    static RelationThresholds load(const std::string& path);
};

/// Does `src <predicate> dst` hold geometrically? Works for every spatial and
/// support predicate plus the evaluation-only `symmetrical`. Style predicates
/// need attributes and live in style_relation_holds.
///
/// Room-frame convention (fixed project-wide): +x right, +y back, +z up;
/// "front" means smaller y in a top-down view.
bool relation_holds(int predicate_id, const graph::BoundingBox& src,
                    const graph::BoundingBox& dst, const RelationThresholds& th,
                    const graph::Vocabulary& vocab);

bool style_relation_holds(int predicate_id, const graph::StyleAttributes& src,
                          const graph::StyleAttributes& dst, const graph::Vocabulary& vocab);

void require_valid_box(const graph::BoundingBox& b, int node_id);

}  // namespace scenegen::annotate

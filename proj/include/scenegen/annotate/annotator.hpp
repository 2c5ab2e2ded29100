// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "scenegen/annotate/relation_rules.hpp"
#include "scenegen/graph/scene.hpp"

namespace scenegen::annotate {

/// Centroid / volume / height comparisons per unordered pair. At most one of
/// each opposing pair is emitted, stored with the lower node index as src.
std::vector<graph::RelationEdge> derive_spatial(const graph::Scene& scene,
                                                const RelationThresholds& th,
                                                const graph::Vocabulary& vocab);

/// close_by (symmetric, stored lowest-id-first), above and standing_on
/// (directed, both orders tested).
std::vector<graph::RelationEdge> derive_support(const graph::Scene& scene,
                                                const RelationThresholds& th,
                                                const graph::Vocabulary& vocab);

/// Attribute-equality relations, one edge per unordered pair with the lower
/// node index as src. Requires per-node attributes.
std::vector<graph::RelationEdge> derive_style(const graph::Scene& scene,
                                              const graph::Vocabulary& vocab);

/// Union of the three passes, deduplicated; the result always passes
/// validate_graph.
graph::SceneGraph annotate(const graph::Scene& scene, const RelationThresholds& th,
                           const graph::Vocabulary& vocab);

}  // namespace scenegen::annotate

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "scenegen/graph/scene.hpp"

namespace scenegen::graph {

/// Stable on-disk scene document:
/// {room_type, nodes:[{id,class,attributes}], edges:[{src,dst,predicate}],
///  boxes:[{size,translation,yaw}]}. Boxes and attributes are optional so a
/// bare graph uses the same schema.
nlohmann::json scene_to_json(const Scene& scene, const Vocabulary& vocab);
Scene scene_from_json(const nlohmann::json& j, const Vocabulary& vocab, int rotation_bins);

void save_scene(const Scene& scene, const Vocabulary& vocab, const std::string& path);
Scene load_scene(const std::string& path, const Vocabulary& vocab, int rotation_bins);

}  // namespace scenegen::graph

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/graph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scenegen::graph {

namespace {

struct SizeRange {
    double wlo, whi, dlo, dhi, hlo, hhi;
};

// rough per-class furniture extents in meters
SizeRange size_range(const std::string& cls) {
    if (cls == "bed") return {1.4, 2.0, 1.9, 2.2, 0.4, 0.7};
    if (cls == "nightstand") return {0.4, 0.6, 0.35, 0.5, 0.45, 0.65};
    if (cls == "wardrobe") return {0.8, 2.0, 0.5, 0.7, 1.8, 2.3};
    if (cls == "chair") return {0.4, 0.55, 0.4, 0.55, 0.8, 1.0};
    if (cls == "table") return {0.8, 1.8, 0.7, 1.1, 0.7, 0.78};
    if (cls == "cabinet") return {0.6, 1.2, 0.4, 0.6, 0.8, 1.6};
    if (cls == "lamp") return {0.15, 0.35, 0.15, 0.35, 0.3, 1.5};
    if (cls == "shelf") return {0.6, 1.2, 0.25, 0.4, 1.0, 2.0};
    if (cls == "sofa") return {1.6, 2.4, 0.8, 1.0, 0.7, 0.9};
    if (cls == "tv_stand") return {1.2, 1.8, 0.4, 0.5, 0.4, 0.6};
    return {0.4, 1.0, 0.4, 1.0, 0.4, 1.0};
}

const char* kMaterials[] = {"wood", "metal", "fabric", "glass", "plastic"};

}  // namespace

Scene random_scene(Rng& rng, const Vocabulary& vocab, const SynthOptions& opt) {
    Scene scene;
    const char* rooms[] = {"bedroom", "living", "dining"};
    scene.room_type = rooms[rng.uniform_int(3)];

    std::vector<int> placeable;
    for (int c = 0; c < vocab.num_classes(); ++c)
        if (vocab.class_entry(c).has_shape) placeable.push_back(c);

    int count = opt.min_objects +
                static_cast<int>(rng.uniform_int(opt.max_objects - opt.min_objects + 1));
    int next_id = 0;

    if (opt.include_floor) {
        int fid = -1;
        for (int c = 0; c < vocab.num_classes(); ++c)
            if (vocab.class_entry(c).name == "floor") fid = c;
        if (fid >= 0) {
            scene.graph.nodes.push_back({next_id++, fid});
            double e = opt.room_extent + 1.0;
            scene.boxes.push_back(BoundingBox::make({2 * e, 2 * e, 0.1}, {0, 0, -0.05}, 0.0,
                                                    opt.rotation_bins));
            scene.attributes.push_back({"none", "slab", "structure"});
        }
    }

    for (int i = 0; i < count; ++i) {
        int cls = placeable[rng.uniform_int(static_cast<int64_t>(placeable.size()))];
        const auto& entry = vocab.class_entry(cls);
        SizeRange sr = size_range(entry.name);
        std::array<double, 3> size = {rng.uniform(sr.wlo, sr.whi), rng.uniform(sr.dlo, sr.dhi),
                                      rng.uniform(sr.hlo, sr.hhi)};
        double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);

        std::array<double, 3> pos{};
        bool stacked = false;
        if (!scene.boxes.empty() && rng.uniform() < opt.stack_probability) {
            // try to rest a small object on a previously placed larger one
            for (int attempt = 0; attempt < 4 && !stacked; ++attempt) {
                size_t base = static_cast<size_t>(rng.uniform_int(
                    static_cast<int64_t>(scene.boxes.size())));
                const auto& bb = scene.boxes[base];
                if (bb.size[0] < 1.5 * size[0] || bb.size[1] < 1.5 * size[1]) continue;
                double gap = rng.uniform() < 0.7 ? 0.0 : rng.uniform(0.1, 0.4);
                pos = {bb.translation[0] + rng.uniform(-0.1, 0.1),
                       bb.translation[1] + rng.uniform(-0.1, 0.1),
                       bb.top() + gap + 0.5 * size[2]};
                yaw = bb.yaw;  // aligned with the supporting surface
                stacked = true;
            }
        }
        if (!stacked)
            pos = {rng.uniform(-opt.room_extent, opt.room_extent),
                   rng.uniform(-opt.room_extent, opt.room_extent), 0.5 * size[2]};

        scene.graph.nodes.push_back({next_id++, cls});
        scene.boxes.push_back(BoundingBox::make(size, pos, yaw, opt.rotation_bins));

        std::string material = kMaterials[rng.uniform_int(5)];
        std::string shape_tag = entry.name + "_v" + std::to_string(rng.uniform_int(3));
        scene.attributes.push_back({material, shape_tag, entry.super_category});
    }
    return scene;
}

}  // namespace scenegen::graph

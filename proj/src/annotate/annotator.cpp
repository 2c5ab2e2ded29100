// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/annotate/annotator.hpp"

#include <set>

#include "scenegen/core/error.hpp"

namespace scenegen::annotate {

using graph::RelationEdge;
using graph::Scene;
using graph::SceneGraph;
using graph::Vocabulary;

namespace {

void check_scene(const Scene& scene) {
    if (scene.boxes.size() != scene.graph.nodes.size())
        throw AlignmentError("annotator: boxes must be index-aligned with nodes");
    for (size_t i = 0; i < scene.boxes.size(); ++i)
        require_valid_box(scene.boxes[i], scene.graph.nodes[i].id);
}

}  // namespace

std::vector<RelationEdge> derive_spatial(const Scene& scene, const RelationThresholds& th,
                                         const Vocabulary& vocab) {
    check_scene(scene);
    th.validate();
    const int left = vocab.predicate_id("left");
    const int right = vocab.predicate_id("right");
    const int front = vocab.predicate_id("front");
    const int behind = vocab.predicate_id("behind");
    const int bigger = vocab.predicate_id("bigger");
    const int smaller = vocab.predicate_id("smaller");
    const int lower = vocab.predicate_id("lower");
    const int higher = vocab.predicate_id("higher");

    std::vector<RelationEdge> out;
    const auto& nodes = scene.graph.nodes;
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (size_t j = i + 1; j < nodes.size(); ++j) {
            const auto& a = scene.boxes[i];
            const auto& b = scene.boxes[j];
            int ai = nodes[i].id, bi = nodes[j].id;
            for (auto [pos, neg] : {std::pair{left, right}, {front, behind}, {bigger, smaller},
                                    {lower, higher}}) {
                if (relation_holds(pos, a, b, th, vocab))
                    out.push_back({ai, bi, pos});
                else if (relation_holds(neg, a, b, th, vocab))
                    out.push_back({ai, bi, neg});
            }
        }
    }
    return out;
}

std::vector<RelationEdge> derive_support(const Scene& scene, const RelationThresholds& th,
                                         const Vocabulary& vocab) {
    check_scene(scene);
    th.validate();
    const int close_by = vocab.predicate_id("close_by");
    const int above = vocab.predicate_id("above");
    const int standing_on = vocab.predicate_id("standing_on");

    std::vector<RelationEdge> out;
    const auto& nodes = scene.graph.nodes;
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (size_t j = i + 1; j < nodes.size(); ++j) {
            const auto& a = scene.boxes[i];
            const auto& b = scene.boxes[j];
            int ai = nodes[i].id, bi = nodes[j].id;
            if (relation_holds(close_by, a, b, th, vocab)) out.push_back({ai, bi, close_by});
            for (int pred : {above, standing_on}) {
                if (relation_holds(pred, a, b, th, vocab)) out.push_back({ai, bi, pred});
                if (relation_holds(pred, b, a, th, vocab)) out.push_back({bi, ai, pred});
            }
        }
    }
    return out;
}

std::vector<RelationEdge> derive_style(const Scene& scene, const Vocabulary& vocab) {
    const auto& nodes = scene.graph.nodes;
    if (scene.attributes.size() != nodes.size()) {
        size_t first = std::min(scene.attributes.size(), nodes.empty() ? 0 : nodes.size() - 1);
        int missing = nodes.empty() ? -1 : nodes[first].id;
        throw AttributeError("derive_style: missing attributes for node " +
                             std::to_string(missing));
    }
    const int same_material = vocab.predicate_id("same_material");
    const int same_shape = vocab.predicate_id("same_shape");
    const int same_super = vocab.predicate_id("same_super_category");

    std::vector<RelationEdge> out;
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (size_t j = i + 1; j < nodes.size(); ++j) {
            for (int pred : {same_material, same_shape, same_super}) {
                if (style_relation_holds(pred, scene.attributes[i], scene.attributes[j], vocab))
                    out.push_back({nodes[i].id, nodes[j].id, pred});
            }
        }
    }
    return out;
}

SceneGraph annotate(const Scene& scene, const RelationThresholds& th, const Vocabulary& vocab) {
    SceneGraph g;
    g.nodes = scene.graph.nodes;

    std::vector<RelationEdge> all = derive_spatial(scene, th, vocab);
    auto support = derive_support(scene, th, vocab);
    all.insert(all.end(), support.begin(), support.end());
    if (scene.attributes.size() == scene.graph.nodes.size() && !scene.attributes.empty()) {
        auto style = derive_style(scene, vocab);
        all.insert(all.end(), style.begin(), style.end());
    }

    std::set<std::tuple<int, int, int>> seen;
    for (const auto& e : all)
        if (seen.insert({e.src, e.dst, e.predicate_id}).second) g.edges.push_back(e);
    return g;
}

}  // namespace scenegen::annotate

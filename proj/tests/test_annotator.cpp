// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "scenegen/annotate/annotator.hpp"
#include "scenegen/graph/geometry.hpp"
#include "scenegen/core/error.hpp"
#include "scenegen/graph/scene_io.hpp"
#include "scenegen/graph/synth.hpp"

using namespace scenegen;
using namespace scenegen::graph;
using namespace scenegen::annotate;

namespace {

const Vocabulary& vocab() { return Vocabulary::load_default(); }

Scene make_scene(const std::vector<std::pair<std::array<double, 3>, std::array<double, 3>>>& boxes,
                 const std::vector<StyleAttributes>& attrs = {}) {
    Scene s;
    for (size_t i = 0; i < boxes.size(); ++i) {
        s.graph.nodes.push_back({static_cast<int>(i), vocab().class_id("table")});
        s.boxes.push_back(BoundingBox::make(boxes[i].first, boxes[i].second, 0.0, 24));
    }
    s.attributes = attrs;
    return s;
}

std::multiset<std::tuple<int, int, int>> edge_multiset(const std::vector<RelationEdge>& es) {
    std::multiset<std::tuple<int, int, int>> m;
    for (const auto& e : es) m.insert({e.src, e.dst, e.predicate_id});
    return m;
}

// Independent straight-line re-implementation of every derivation rule,
// kept deliberately naive; the annotator must agree with it exactly.
std::multiset<std::tuple<int, int, int>> oracle_edges(const Scene& s,
                                                      const RelationThresholds& th) {
    std::multiset<std::tuple<int, int, int>> out;
    const auto& v = vocab();
    auto id = [&](const char* n) { return v.predicate_id(n); };
    size_t n = s.graph.nodes.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const auto& a = s.boxes[i];
            const auto& b = s.boxes[j];
            int ai = s.graph.nodes[i].id, bi = s.graph.nodes[j].id;
            double dx = a.translation[0] - b.translation[0];
            double dy = a.translation[1] - b.translation[1];
            if (dx < -th.lateral_margin)
                out.insert({ai, bi, id("left")});
            else if (dx > th.lateral_margin)
                out.insert({ai, bi, id("right")});
            if (dy < -th.lateral_margin)
                out.insert({ai, bi, id("front")});
            else if (dy > th.lateral_margin)
                out.insert({ai, bi, id("behind")});
            double va = a.volume(), vb = b.volume();
            if (va >= th.volume_ratio_min * vb)
                out.insert({ai, bi, id("bigger")});
            else if (vb >= th.volume_ratio_min * va)
                out.insert({ai, bi, id("smaller")});
            if (a.top() <= b.top() - th.height_diff_min)
                out.insert({ai, bi, id("lower")});
            else if (a.top() >= b.top() + th.height_diff_min)
                out.insert({ai, bi, id("higher")});
            if (box_gap(a, b) <= th.closeby_max_gap) out.insert({ai, bi, id("close_by")});
            auto above = [&](const BoundingBox& u, const BoundingBox& w) {
                return u.bottom() >= w.top() - 1e-9 &&
                       footprint_overlap_fraction(u, w) >= th.above_min_overlap;
            };
            if (above(a, b)) {
                out.insert({ai, bi, id("above")});
                if (a.bottom() - b.top() <= th.standing_on_max_gap)
                    out.insert({ai, bi, id("standing_on")});
            }
            if (above(b, a)) {
                out.insert({bi, ai, id("above")});
                if (b.bottom() - a.top() <= th.standing_on_max_gap)
                    out.insert({bi, ai, id("standing_on")});
            }
            if (i < s.attributes.size() && j < s.attributes.size()) {
                const auto& sa = s.attributes[i];
                const auto& sb = s.attributes[j];
                if (!sa.material.empty() && sa.material == sb.material)
                    out.insert({ai, bi, id("same_material")});
                if (!sa.shape.empty() && sa.shape == sb.shape)
                    out.insert({ai, bi, id("same_shape")});
                if (!sa.super_category.empty() && sa.super_category == sb.super_category)
                    out.insert({ai, bi, id("same_super_category")});
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("derive_spatial centroid and volume rules") {
    RelationThresholds th;
    th.lateral_margin = 0.1;
    Scene s = make_scene({{{1, 1, 1}, {-1, 0, 0.5}}, {{1, 1, 1}, {1, 0, 0.5}}});
    auto edges = derive_spatial(s, th, vocab());
    bool found_left = false;
    for (auto& e : edges)
        if (e.src == 0 && e.dst == 1 && e.predicate_id == vocab().predicate_id("left"))
            found_left = true;
    CHECK(found_left);

    // identical boxes: every test inside its dead zone
    Scene ident = make_scene({{{1, 1, 1}, {0, 0, 0.5}}, {{1, 1, 1}, {0, 0, 0.5}}});
    CHECK(derive_spatial(ident, th, vocab()).empty());

    // volume ratio 2 with min 1.5
    RelationThresholds th2;
    th2.volume_ratio_min = 1.5;
    Scene vols = make_scene({{{2, 1, 1}, {0, 0, 0.5}}, {{1, 1, 1}, {3, 0, 0.5}}});
    auto e2 = derive_spatial(vols, th2, vocab());
    bool bigger = false;
    for (auto& e : e2)
        if (e.src == 0 && e.dst == 1 && e.predicate_id == vocab().predicate_id("bigger"))
            bigger = true;
    CHECK(bigger);

    Scene degenerate = make_scene({{{1, 1, 1}, {0, 0, 0.5}}});
    degenerate.boxes[0].size[0] = 0.0;  // bypass the constructor check on purpose
    CHECK_THROWS_AS(derive_spatial(degenerate, th, vocab()), NumericError);
}

TEST_CASE("derive_support stacking rules") {
    RelationThresholds th;
    // lamp resting on table with full overlap
    Scene s = make_scene({{{0.2, 0.2, 0.4}, {0, 0, 0.95}}, {{1.0, 1.0, 0.75}, {0, 0, 0.375}}});
    auto edges = derive_support(s, th, vocab());
    auto ms = edge_multiset(edges);
    CHECK(ms.count({0, 1, vocab().predicate_id("standing_on")}) == 1);
    CHECK(ms.count({0, 1, vocab().predicate_id("above")}) == 1);
    CHECK(ms.count({0, 1, vocab().predicate_id("close_by")}) == 1);

    // far apart: nothing
    Scene far = make_scene({{{1, 1, 1}, {0, 0, 0.5}}, {{1, 1, 1}, {6, 0, 0.5}}});
    CHECK(derive_support(far, th, vocab()).empty());

    // above with only ~10% footprint overlap and min 0.3: no edge
    Scene low = make_scene({{{1, 1, 0.2}, {0.9, 0.45, 1.2}}, {{1, 1, 1}, {0, 0, 0.5}}});
    double frac = footprint_overlap_fraction(low.boxes[0], low.boxes[1]);
    CHECK(frac < 0.3);
    auto le = derive_support(low, th, vocab());
    CHECK(edge_multiset(le).count({0, 1, vocab().predicate_id("above")}) == 0);
}

TEST_CASE("derive_style attribute rules and error") {
    Scene s = make_scene({{{1, 1, 1}, {0, 0, 0.5}},
                          {{1, 1, 1}, {3, 0, 0.5}},
                          {{1, 1, 1}, {0, 3, 0.5}}},
                         {{"wood", "chair_v1", "seating"},
                          {"wood", "chair_v1", "seating"},
                          {"wood", "chair_v2", "seating"}});
    auto edges = derive_style(s, vocab());
    auto ms = edge_multiset(edges);
    CHECK(ms.count({0, 1, vocab().predicate_id("same_shape")}) == 1);
    CHECK(ms.count({0, 2, vocab().predicate_id("same_shape")}) == 0);
    // three chairs share material: C(3,2) edges
    int mat = 0;
    for (auto& e : edges)
        if (e.predicate_id == vocab().predicate_id("same_material")) ++mat;
    CHECK(mat == 3);

    s.attributes.pop_back();
    CHECK_THROWS_AS(derive_style(s, vocab()), AttributeError);
}

TEST_CASE("annotate equals the brute-force oracle on random scenes") {
    RelationThresholds th;
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        Scene s = random_scene(rng, vocab());
        SceneGraph g = annotate::annotate(s, th, vocab());
        CHECK(validate_graph(g, vocab()).empty());
        // the annotator deduplicates; the oracle never produces duplicates
        CHECK(edge_multiset(g.edges) == oracle_edges(s, th));
    }
}

TEST_CASE("single-object scene annotates to a lone node") {
    RelationThresholds th;
    Scene s = make_scene({{{1, 1, 1}, {0, 0, 0.5}}}, {{"wood", "t", "table"}});
    SceneGraph g = annotate::annotate(s, th, vocab());
    CHECK(g.nodes.size() == 1);
    CHECK(g.edges.empty());
}

TEST_CASE("annotator is translation invariant and deterministic") {
    RelationThresholds th;
    Rng rng(123);
    for (int trial = 0; trial < 10; ++trial) {
        Scene s = random_scene(rng, vocab());
        SceneGraph g1 = annotate::annotate(s, th, vocab());

        Scene moved = s;
        std::array<double, 3> shift = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2, 2)};
        for (auto& b : moved.boxes)
            for (int k = 0; k < 3; ++k) b.translation[k] += shift[k];
        SceneGraph g2 = annotate::annotate(moved, th, vocab());
        CHECK(edge_multiset(g1.edges) == edge_multiset(g2.edges));

        // byte-for-byte determinism after canonical serialization
        Scene a = s, b = s;
        a.graph = annotate::annotate(s, th, vocab());
        b.graph = annotate::annotate(s, th, vocab());
        CHECK(scene_to_json(a, vocab()).dump() == scene_to_json(b, vocab()).dump());
    }
}

TEST_CASE("annotator never emits both directions of an opposing pair") {
    RelationThresholds th;
    Rng rng(7);
    auto opp = [&](const char* a, const char* b) {
        return std::pair{vocab().predicate_id(a), vocab().predicate_id(b)};
    };
    std::vector<std::pair<int, int>> pairs = {opp("left", "right"), opp("front", "behind"),
                                              opp("bigger", "smaller"), opp("lower", "higher")};
    for (int trial = 0; trial < 20; ++trial) {
        Scene s = random_scene(rng, vocab());
        SceneGraph g = annotate::annotate(s, th, vocab());
        for (auto [p, q] : pairs) {
            for (const auto& e : g.edges) {
                if (e.predicate_id != p) continue;
                for (const auto& f : g.edges) {
                    bool same_pair = (f.src == e.src && f.dst == e.dst) ||
                                     (f.src == e.dst && f.dst == e.src);
                    if (same_pair && f.predicate_id == q) CHECK(false);
                }
            }
        }
    }
}

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/graph/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "scenegen/core/error.hpp"

#ifndef SCENEGEN_ASSET_DIR
#define SCENEGEN_ASSET_DIR "assets"
#endif

namespace scenegen::graph {

using nlohmann::json;

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open vocabulary file: " + path);
    json j = json::parse(f);
    Vocabulary v;
    for (const auto& c : j.at("classes"))
        v.classes_.push_back({c.at("name").get<std::string>(),
                              c.value("super_category", std::string{}),
                              c.value("has_shape", true)});
    for (const auto& p : j.at("predicates"))
        v.predicates_.push_back({p.at("name").get<std::string>(),
                                 p.value("phrase", p.at("name").get<std::string>()),
                                 p.value("group", std::string{"spatial"})});
    if (v.classes_.empty() || v.predicates_.empty())
        throw ConfigError("vocabulary must define classes and predicates");
    return v;
}

const Vocabulary& Vocabulary::load_default() {
    static Vocabulary v = load(std::string(SCENEGEN_ASSET_DIR) + "/vocabulary.json");
    return v;
}

int Vocabulary::class_id(const std::string& name) const {
    for (size_t i = 0; i < classes_.size(); ++i)
        if (classes_[i].name == name) return static_cast<int>(i);
    throw VocabularyError("unknown object class '" + name + "'");
}

int Vocabulary::predicate_id(const std::string& name) const {
    for (size_t i = 0; i < predicates_.size(); ++i)
        if (predicates_[i].name == name) return static_cast<int>(i);
    throw VocabularyError("unknown predicate '" + name + "'");
}

const Vocabulary::ClassEntry& Vocabulary::class_entry(int id) const {
    if (!valid_class(id)) throw VocabularyError("class id out of range: " + std::to_string(id));
    return classes_[static_cast<size_t>(id)];
}

const Vocabulary::Predicate& Vocabulary::predicate(int id) const {
    if (!valid_predicate(id))
        throw VocabularyError("predicate id out of range: " + std::to_string(id));
    return predicates_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::producible_predicates() const {
    std::vector<int> out;
    for (int i = 0; i < num_predicates(); ++i)
        if (predicates_[static_cast<size_t>(i)].group != "eval") out.push_back(i);
    return out;
}

int SceneGraph::node_index(int id) const {
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

int SceneGraph::fresh_id() const {
    int mx = -1;
    for (const auto& n : nodes) mx = std::max(mx, n.id);
    return mx + 1;
}

BoundingBox BoundingBox::make(const std::array<double, 3>& size,
                              const std::array<double, 3>& translation, double yaw_raw, int bins) {
    for (double s : size)
        if (!(s > 0.0)) throw NumericError("box size components must be strictly positive");
    CanonicalYaw cy = canonicalize_yaw(yaw_raw, bins);
    BoundingBox b;
    b.size = size;
    b.translation = translation;
    b.yaw = cy.yaw;
    b.bin_label = cy.bin;
    return b;
}

std::array<std::array<double, 2>, 4> BoundingBox::footprint() const {
    double hw = 0.5 * size[0], hd = 0.5 * size[1];
    double c = std::cos(yaw), s = std::sin(yaw);
    std::array<std::array<double, 2>, 4> out;
    const double local[4][2] = {{-hw, -hd}, {hw, -hd}, {hw, hd}, {-hw, hd}};
    for (int i = 0; i < 4; ++i) {
        out[static_cast<size_t>(i)] = {translation[0] + c * local[i][0] - s * local[i][1],
                                       translation[1] + s * local[i][0] + c * local[i][1]};
    }
    return out;
}

SceneGraph add_node(const SceneGraph& g, int class_id, const std::vector<EdgeSpec>& edges,
                    const Vocabulary& vocab) {
    if (!vocab.valid_class(class_id))
        throw VocabularyError("add_node: class id out of range: " + std::to_string(class_id));
    for (const auto& e : edges) {
        if (!g.has_node(e.other_node))
            throw ReferenceError("add_node: edge references missing node " +
                                 std::to_string(e.other_node));
        if (!vocab.valid_predicate(e.predicate_id))
            throw VocabularyError("add_node: predicate id out of range: " +
                                  std::to_string(e.predicate_id));
    }
    SceneGraph out = g;
    int id = out.fresh_id();
    out.nodes.push_back({id, class_id});
    for (const auto& e : edges) {
        if (e.direction == EdgeDirection::Outgoing)
            out.edges.push_back({id, e.other_node, e.predicate_id});
        else
            out.edges.push_back({e.other_node, id, e.predicate_id});
    }
    return out;
}

SceneGraph change_relation(const SceneGraph& g, int src, int dst, int new_predicate,
                           const Vocabulary& vocab) {
    if (!vocab.valid_predicate(new_predicate))
        throw VocabularyError("change_relation: predicate id out of range: " +
                              std::to_string(new_predicate));
    SceneGraph out = g;
    for (auto& e : out.edges) {
        if (e.src == src && e.dst == dst) {
            e.predicate_id = new_predicate;
            return out;
        }
    }
    throw ReferenceError("change_relation: no edge " + std::to_string(src) + " -> " +
                         std::to_string(dst));
}

std::vector<Violation> validate_graph(const SceneGraph& g, const Vocabulary& vocab) {
    std::vector<Violation> out;
    std::unordered_set<int> ids;
    for (const auto& n : g.nodes) {
        if (!ids.insert(n.id).second)
            out.push_back({"unique node ids", "node id " + std::to_string(n.id) + " repeats"});
        if (!vocab.valid_class(n.class_id))
            out.push_back({"class within vocabulary",
                           "node " + std::to_string(n.id) + " has class " +
                               std::to_string(n.class_id)});
    }
    std::set<std::tuple<int, int, int>> triples;
    for (const auto& e : g.edges) {
        std::string tag = std::to_string(e.src) + " -> " + std::to_string(e.dst);
        if (e.src == e.dst) out.push_back({"src != dst", "self-loop on node " + tag});
        if (!ids.count(e.src)) out.push_back({"edge endpoints exist", "missing src in " + tag});
        if (!ids.count(e.dst)) out.push_back({"edge endpoints exist", "missing dst in " + tag});
        if (!vocab.valid_predicate(e.predicate_id))
            out.push_back({"predicate within vocabulary",
                           "edge " + tag + " has predicate " + std::to_string(e.predicate_id)});
        if (!triples.insert({e.src, e.dst, e.predicate_id}).second)
            out.push_back({"duplicate edge", "repeated triple on " + tag});
    }
    return out;
}

CanonicalYaw canonicalize_yaw(double yaw, int bins) {
    if (!std::isfinite(yaw)) throw NumericError("yaw must be finite");
    if (bins < 1) throw ConfigError("rotation bins must be >= 1");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::fmod(yaw, two_pi);
    if (a < 0) a += two_pi;
    if (a >= two_pi) a = 0.0;  // guard against fmod rounding at the seam
    int bin = static_cast<int>(std::floor(a * bins / two_pi));
    bin = std::min(bin, bins - 1);
    return {a, bin};
}

double bin_center(int bin, int bins) {
    return (bin + 0.5) * 2.0 * std::numbers::pi / bins;
}

}  // namespace scenegen::graph

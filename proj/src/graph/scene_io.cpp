// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/graph/scene_io.hpp"

#include <fstream>

#include "scenegen/core/error.hpp"

namespace scenegen::graph {

using nlohmann::json;

json scene_to_json(const Scene& scene, const Vocabulary& vocab) {
    json j;
    j["room_type"] = scene.room_type;
    json nodes = json::array();
    for (size_t i = 0; i < scene.graph.nodes.size(); ++i) {
        const auto& n = scene.graph.nodes[i];
        json jn;
        jn["id"] = n.id;
        jn["class"] = vocab.class_entry(n.class_id).name;
        if (i < scene.attributes.size()) {
            const auto& a = scene.attributes[i];
            jn["attributes"] = {{"material", a.material},
                                {"shape", a.shape},
                                {"super_category", a.super_category}};
        }
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    json edges = json::array();
    for (const auto& e : scene.graph.edges)
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"predicate", vocab.predicate(e.predicate_id).name}});
    j["edges"] = edges;
    if (!scene.boxes.empty()) {
        json boxes = json::array();
        for (const auto& b : scene.boxes)
            boxes.push_back({{"size", b.size}, {"translation", b.translation}, {"yaw", b.yaw}});
        j["boxes"] = boxes;
    }
    return j;
}

Scene scene_from_json(const json& j, const Vocabulary& vocab, int rotation_bins) {
    Scene s;
    s.room_type = j.value("room_type", std::string{"bedroom"});
    for (const auto& jn : j.at("nodes")) {
        ObjectNode n;
        n.id = jn.at("id").get<int>();
        n.class_id = vocab.class_id(jn.at("class").get<std::string>());
        s.graph.nodes.push_back(n);
        if (jn.contains("attributes")) {
            const auto& a = jn.at("attributes");
            s.attributes.push_back({a.value("material", std::string{}),
                                    a.value("shape", std::string{}),
                                    a.value("super_category", std::string{})});
        }
    }
    if (!s.attributes.empty() && s.attributes.size() != s.graph.nodes.size())
        throw AlignmentError("scene attributes must cover every node or none");
    if (j.contains("edges"))
        for (const auto& je : j.at("edges"))
            s.graph.edges.push_back({je.at("src").get<int>(), je.at("dst").get<int>(),
                                     vocab.predicate_id(je.at("predicate").get<std::string>())});
    if (j.contains("boxes")) {
        for (const auto& jb : j.at("boxes")) {
            auto size = jb.at("size").get<std::array<double, 3>>();
            auto tr = jb.at("translation").get<std::array<double, 3>>();
            s.boxes.push_back(BoundingBox::make(size, tr, jb.at("yaw").get<double>(), rotation_bins));
        }
        if (s.boxes.size() != s.graph.nodes.size())
            throw AlignmentError("scene boxes must be index-aligned with nodes");
    }
    auto violations = validate_graph(s.graph, vocab);
    if (!violations.empty())
        throw ReferenceError("scene document violates graph invariants: " + violations[0].rule +
                             " (" + violations[0].detail + ")");
    return s;
}

void save_scene(const Scene& scene, const Vocabulary& vocab, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write scene file: " + path);
    f << scene_to_json(scene, vocab).dump(2) << "\n";
}

Scene load_scene(const std::string& path, const Vocabulary& vocab, int rotation_bins) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scene file: " + path);
    return scene_from_json(json::parse(f), vocab, rotation_bins);
}

}  // namespace scenegen::graph

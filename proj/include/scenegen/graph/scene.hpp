// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace scenegen::graph {

/// Object classes and edge predicates, loaded from a JSON asset so the lists
/// can be swapped without a rebuild.
class Vocabulary {
public:
    struct ClassEntry {
        std::string name;
        std::string super_category;
        bool has_shape = true;
    };
    struct Predicate {
        std::string name;
        std::string phrase;  // natural-language form used for prompts
        std::string group;   // spatial | support | style | eval
    };

    static Vocabulary load(const std::string& path);
    static const Vocabulary& load_default();  // assets/vocabulary.json

    int num_classes() const { return static_cast<int>(classes_.size()); }
    int num_predicates() const { return static_cast<int>(predicates_.size()); }

    int class_id(const std::string& name) const;          // throws VocabularyError
    int predicate_id(const std::string& name) const;      // throws VocabularyError
    const ClassEntry& class_entry(int id) const;
    const Predicate& predicate(int id) const;
    bool valid_class(int id) const { return id >= 0 && id < num_classes(); }
    bool valid_predicate(int id) const { return id >= 0 && id < num_predicates(); }

    /// Predicates the annotator can emit (everything except group "eval").
    std::vector<int> producible_predicates() const;

private:
    std::vector<ClassEntry> classes_;
    std::vector<Predicate> predicates_;
};

struct ObjectNode {
    int id = 0;        // unique within a graph
    int class_id = 0;  // index into Vocabulary classes
};

struct RelationEdge {
    int src = 0;
    int dst = 0;
    int predicate_id = 0;
};

struct SceneGraph {
    std::vector<ObjectNode> nodes;
    std::vector<RelationEdge> edges;

    int node_index(int id) const;  // -1 when absent
    bool has_node(int id) const { return node_index(id) >= 0; }
    int fresh_id() const;
};

/// Oriented box: size s (meters, > 0), translation t (meters), yaw about +z
/// canonicalized into [0, 2pi), plus its rotation-bin label.
struct BoundingBox {
    std::array<double, 3> size{1, 1, 1};
    std::array<double, 3> translation{0, 0, 0};
    double yaw = 0.0;
    int bin_label = 0;

    static BoundingBox make(const std::array<double, 3>& size,
                            const std::array<double, 3>& translation, double yaw_raw, int bins);

    double volume() const { return size[0] * size[1] * size[2]; }
    double top() const { return translation[2] + 0.5 * size[2]; }
    double bottom() const { return translation[2] - 0.5 * size[2]; }
    /// Footprint corners in the xy-plane (counter-clockwise).
    std::array<std::array<double, 2>, 4> footprint() const;
};

struct StyleAttributes {
    std::string material;
    std::string shape;
    std::string super_category;
};

/// A full scene: graph plus per-node geometry and (for ground-truth data)
/// style attributes. `boxes`/`attributes`/`shape_files` are index-aligned
/// with `graph.nodes`; the latter two may be empty for generated scenes.
struct Scene {
    std::string room_type = "bedroom";  // bedroom | living | dining
    SceneGraph graph;
    std::vector<BoundingBox> boxes;
    std::vector<StyleAttributes> attributes;
    std::vector<std::string> shape_files;
};

struct Violation {
    std::string rule;
    std::string detail;
};

enum class EdgeDirection { Outgoing, Incoming };

struct EdgeSpec {
    int other_node = 0;
    int predicate_id = 0;
    EdgeDirection direction = EdgeDirection::Outgoing;
};

/// Pure graph edits (inputs are never mutated).
SceneGraph add_node(const SceneGraph& g, int class_id, const std::vector<EdgeSpec>& edges,
                    const Vocabulary& vocab);
SceneGraph change_relation(const SceneGraph& g, int src, int dst, int new_predicate,
                           const Vocabulary& vocab);

/// Total function: empty result iff every graph invariant holds.
std::vector<Violation> validate_graph(const SceneGraph& g, const Vocabulary& vocab);

/// Wrap into [0, 2pi) and classify into one of `bins` equal sectors.
struct CanonicalYaw {
    double yaw;
    int bin;
};
CanonicalYaw canonicalize_yaw(double yaw, int bins);
double bin_center(int bin, int bins);

}  // namespace scenegen::graph

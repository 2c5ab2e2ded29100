// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scenegen/core/nn.hpp"
#include "scenegen/core/rng.hpp"
#include "scenegen/graph/scene.hpp"

namespace scenegen::context {

/// Frozen text-embedding plug-in. Implementations must be deterministic
/// (equal strings map to identical vectors) and safe for concurrent reads.
/// The provider identity (name/version/dim) is recorded in checkpoints.
class TextEmbeddingProvider {
public:
    virtual ~TextEmbeddingProvider() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual std::string version() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;

    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const;
};

/// Default provider: seeded-hash projection of whitespace tokens onto a unit
/// sphere. Runs without any model weights; a real language-model text encoder
/// can be swapped in behind the same interface.
class HashedTextProvider : public TextEmbeddingProvider {
public:
    explicit HashedTextProvider(int dim = 512, uint64_t seed = 0x5ce9e);

    int dim() const override { return dim_; }
    std::string name() const override { return "hashed-projection"; }
    std::string version() const override { return "1"; }
    std::vector<double> embed(const std::string& text) const override;

private:
    int dim_;
    uint64_t seed_;
};

struct ContextConfig {
    int node_embed_dim = 64;  // learnable per-class embedding o_i
    int edge_embed_dim = 64;  // learnable per-predicate embedding tau_ij
    int box_embed_dim = 64;   // output of the box encoder b_i
    int box_hidden = 64;      // hidden width of the 3-layer box encoder
    bool zero_init_box_encoder = false;
};

/// Index-aligned feature bundles for one graph. Node rows follow
/// graph.nodes order; edge rows follow graph.edges order. `src`/`dst`
/// hold node *indices* (not ids) for gather/scatter.
struct GraphFeatures {
    ad::Var node_features;  // [N, p (+ o) (+ b)] depending on builder mode
    ad::Var edge_features;  // [E, p + tau]
    std::vector<int> src, dst;
    bool has_boxes = false;
};

/// Builds Contextual Graph and Box-enhanced Contextual Graph features:
/// frozen prompt embeddings plus learnable class/predicate embeddings and
/// (in training mode) box-encoder outputs.
class ContextBuilder {
public:
    ContextBuilder(nn::ParamStore& ps, const graph::Vocabulary& vocab,
                   const TextEmbeddingProvider& provider, const ContextConfig& cfg, Rng& rng);

    /// p_i for a node class; cached per class. Frozen (no gradient).
    const std::vector<double>& embed_node_prompt(int class_id) const;
    /// p_{i->j} for "<subject> <predicate-phrase> <object>"; cached per triple.
    const std::vector<double>& embed_edge_prompt(int subject_class, int predicate_id,
                                                 int object_class) const;

    /// 3-layer perceptron over the 7-vector (s, t, yaw); differentiable.
    ad::Var encode_box(const graph::BoundingBox& box) const;
    ad::Var encode_boxes(const std::vector<graph::BoundingBox>& boxes) const;
    /// Same encoder applied to an existing [N,7] graph value, so callers can
    /// differentiate with respect to the raw box parameters.
    ad::Var encode_box_features(const ad::Var& raw) const;

    /// Training mode passes boxes (BCG); inference mode passes nullptr and
    /// the bundles carry no b_i component.
    GraphFeatures build_bcg(const graph::SceneGraph& g,
                            const std::vector<graph::BoundingBox>* boxes) const;

    int node_feature_dim(bool with_boxes) const;
    int edge_feature_dim() const;
    const ContextConfig& config() const { return cfg_; }
    const TextEmbeddingProvider& provider() const { return provider_; }

private:
    const graph::Vocabulary& vocab_;
    const TextEmbeddingProvider& provider_;
    ContextConfig cfg_;
    ad::Var class_embeddings_;      // [num_classes, node_embed_dim]
    ad::Var predicate_embeddings_;  // [num_predicates, edge_embed_dim]
    nn::Mlp box_encoder_;
    mutable std::map<int, std::vector<double>> node_prompt_cache_;
    mutable std::map<std::tuple<int, int, int>, std::vector<double>> edge_prompt_cache_;
};

}  // namespace scenegen::context

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/context/context.hpp"

#include <cmath>
#include <sstream>

#include "scenegen/core/error.hpp"

namespace scenegen::context {

using ad::Var;

std::vector<std::vector<double>> TextEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) const {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

HashedTextProvider::HashedTextProvider(int dim, uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 1) throw ConfigError("provider dim must be positive");
}

namespace {
uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace

std::vector<double> HashedTextProvider::embed(const std::string& text) const {
    std::vector<double> acc(static_cast<size_t>(dim_), 0.0);
    std::istringstream iss(text);
    std::string token;
    uint64_t pos = 1;
    while (iss >> token) {
        Rng rng(fnv1a(token) ^ (seed_ + 0x9e37 * pos));
        for (int i = 0; i < dim_; ++i) acc[static_cast<size_t>(i)] += rng.normal();
        ++pos;
    }
    double norm = 0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0)
        for (double& v : acc) v /= norm;
    return acc;
}

ContextBuilder::ContextBuilder(nn::ParamStore& ps, const graph::Vocabulary& vocab,
                               const TextEmbeddingProvider& provider, const ContextConfig& cfg,
                               Rng& rng)
    : vocab_(vocab), provider_(provider), cfg_(cfg) {
    class_embeddings_ = ps.get_or_create("context.class_embed",
                                         {vocab.num_classes(), cfg.node_embed_dim},
                                         nn::init_normal(0.1), rng);
    predicate_embeddings_ = ps.get_or_create("context.predicate_embed",
                                             {vocab.num_predicates(), cfg.edge_embed_dim},
                                             nn::init_normal(0.1), rng);
    box_encoder_ = nn::Mlp(ps, "context.box_encoder",
                           {7, cfg.box_hidden, cfg.box_hidden, cfg.box_embed_dim}, rng);
    if (cfg.zero_init_box_encoder)
        for (auto& layer : box_encoder_.layers) layer.W.value().fill(0.0);
}

const std::vector<double>& ContextBuilder::embed_node_prompt(int class_id) const {
    if (!vocab_.valid_class(class_id))
        throw VocabularyError("embed_node_prompt: bad class id " + std::to_string(class_id));
    auto it = node_prompt_cache_.find(class_id);
    if (it == node_prompt_cache_.end())
        it = node_prompt_cache_.emplace(class_id, provider_.embed(vocab_.class_entry(class_id).name))
                 .first;
    return it->second;
}

const std::vector<double>& ContextBuilder::embed_edge_prompt(int subject_class, int predicate_id,
                                                             int object_class) const {
    if (!vocab_.valid_class(subject_class) || !vocab_.valid_class(object_class))
        throw VocabularyError("embed_edge_prompt: bad class id");
    if (!vocab_.valid_predicate(predicate_id))
        throw VocabularyError("embed_edge_prompt: bad predicate id");
    auto key = std::make_tuple(subject_class, predicate_id, object_class);
    auto it = edge_prompt_cache_.find(key);
    if (it == edge_prompt_cache_.end()) {
        std::string prompt = vocab_.class_entry(subject_class).name + " " +
                             vocab_.predicate(predicate_id).phrase + " " +
                             vocab_.class_entry(object_class).name;
        it = edge_prompt_cache_.emplace(key, provider_.embed(prompt)).first;
    }
    return it->second;
}

Var ContextBuilder::encode_box(const graph::BoundingBox& box) const {
    return encode_boxes({box});
}

Var ContextBuilder::encode_boxes(const std::vector<graph::BoundingBox>& boxes) const {
    Tensor in({static_cast<int>(boxes.size()), 7});
    for (size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        for (int k = 0; k < 3; ++k) {
            if (!std::isfinite(b.size[k]) || !std::isfinite(b.translation[k]))
                throw NumericError("encode_box: non-finite box parameters");
            in.at(static_cast<int>(i), k) = b.size[k];
            in.at(static_cast<int>(i), 3 + k) = b.translation[k];
        }
        if (!std::isfinite(b.yaw)) throw NumericError("encode_box: non-finite yaw");
        in.at(static_cast<int>(i), 6) = b.yaw;
    }
    return encode_box_features(ad::constant(std::move(in)));
}

Var ContextBuilder::encode_box_features(const Var& raw) const {
    if (raw.value().rank() != 2 || raw.value().cols() != 7)
        throw ShapeError("encode_box_features: need [N,7] input");
    return box_encoder_.forward(raw);
}

GraphFeatures ContextBuilder::build_bcg(const graph::SceneGraph& g,
                                        const std::vector<graph::BoundingBox>* boxes) const {
    const int N = static_cast<int>(g.nodes.size());
    const int E = static_cast<int>(g.edges.size());
    if (boxes && static_cast<int>(boxes->size()) != N)
        throw AlignmentError("build_bcg: boxes not index-aligned with nodes");

    const int pdim = provider_.dim();
    Tensor prompts({N, pdim});
    std::vector<int> class_rows(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
        const auto& p = embed_node_prompt(g.nodes[static_cast<size_t>(i)].class_id);
        std::copy(p.begin(), p.end(), prompts.data() + static_cast<int64_t>(i) * pdim);
        class_rows[static_cast<size_t>(i)] = g.nodes[static_cast<size_t>(i)].class_id;
    }
    Var node_parts = ad::concat_cols(
        {ad::constant(std::move(prompts)), ad::gather_rows(class_embeddings_, class_rows)});
    if (boxes) node_parts = ad::concat_cols({node_parts, encode_boxes(*boxes)});

    GraphFeatures out;
    out.node_features = node_parts;
    out.has_boxes = boxes != nullptr;
    out.src.reserve(static_cast<size_t>(E));
    out.dst.reserve(static_cast<size_t>(E));

    Tensor eprompts({E, pdim});
    std::vector<int> pred_rows(static_cast<size_t>(E));
    for (int e = 0; e < E; ++e) {
        const auto& edge = g.edges[static_cast<size_t>(e)];
        int si = g.node_index(edge.src);
        int di = g.node_index(edge.dst);
        if (si < 0 || di < 0) throw ReferenceError("build_bcg: edge references missing node");
        out.src.push_back(si);
        out.dst.push_back(di);
        const auto& p = embed_edge_prompt(g.nodes[static_cast<size_t>(si)].class_id,
                                          edge.predicate_id,
                                          g.nodes[static_cast<size_t>(di)].class_id);
        std::copy(p.begin(), p.end(), eprompts.data() + static_cast<int64_t>(e) * pdim);
        pred_rows[static_cast<size_t>(e)] = edge.predicate_id;
    }
    if (E > 0) {
        out.edge_features = ad::concat_cols(
            {ad::constant(std::move(eprompts)), ad::gather_rows(predicate_embeddings_, pred_rows)});
    } else {
        out.edge_features = ad::constant(Tensor({0, edge_feature_dim()}));
    }
    return out;
}

int ContextBuilder::node_feature_dim(bool with_boxes) const {
    return provider_.dim() + cfg_.node_embed_dim + (with_boxes ? cfg_.box_embed_dim : 0);
}

int ContextBuilder::edge_feature_dim() const { return provider_.dim() + cfg_.edge_embed_dim; }

}  // namespace scenegen::context

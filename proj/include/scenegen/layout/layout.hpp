// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "scenegen/context/context.hpp"
#include "scenegen/gcn/triplet_gcn.hpp"
#include "scenegen/graph/scene.hpp"

namespace scenegen::layout {

struct LayoutConfig {
    int latent_dim = 128;    // width of the per-node layout-shape Gaussian
    int rotation_bins = 24;  // yaw classification bins
    int gcn_layers = 5;
    int gcn_hidden = 512;
    int head_hidden = 256;  // box regression head width
};

/// Per-node Gaussian over the joint layout-shape latent, kept as graph
/// Vars so gradients reach the encoder.
struct PosteriorBatch {
    ad::Var mu;         // [N, latent_dim]
    ad::Var log_sigma;  // [N, latent_dim]
};

/// Decoded box predictions for one graph.
struct LayoutPrediction {
    ad::Var sizes;         // [N, 3], strictly positive
    ad::Var translations;  // [N, 3]
    ad::Var logits;        // [N, rotation_bins]
};

/// Graph encoder to the latent distribution plus the layout decoder:
/// posterior heads on top of one triplet-GCN, box regression on another.
class LayoutBranch {
public:
    LayoutBranch(nn::ParamStore& ps, const context::ContextBuilder& ctx, const LayoutConfig& cfg,
                 Rng& rng);

    /// Posterior from a training-mode BCG (boxes required).
    PosteriorBatch encode_posterior(const context::GraphFeatures& bcg) const;

    /// Mean over nodes of KL(N(mu, sigma) || N(0, 1)), closed form.
    ad::Var kl_loss(const PosteriorBatch& q) const;

    /// Reparameterized draw z = mu + sigma * eps.
    ad::Var sample_latent(const PosteriorBatch& q, Rng& rng) const;
    /// Prior draw for inference: z ~ N(0,1), one row per node.
    ad::Var sample_prior(int num_nodes, Rng& rng) const;

    /// Node features {z_i, p_i, o_i} for the downstream decoders: the latent
    /// samples concatenated with the inference-mode contextual features.
    ad::Var updated_node_features(const ad::Var& z, const context::GraphFeatures& cg) const;

    LayoutPrediction decode_layout(const ad::Var& updated_nodes,
                                   const context::GraphFeatures& cg) const;

    /// Eq-style reconstruction loss: mean over nodes of L1(size) + L1(trans)
    /// + CE(rotation bin).
    ad::Var layout_loss(const LayoutPrediction& pred,
                        const std::vector<graph::BoundingBox>& gt) const;

    /// Bin-center yaw reconstruction into concrete boxes.
    std::vector<graph::BoundingBox> assemble_layout(const LayoutPrediction& pred) const;

    const LayoutConfig& config() const { return cfg_; }
    int updated_feature_dim() const;

private:
    const context::ContextBuilder& ctx_;
    LayoutConfig cfg_;
    gcn::TripletGcn encoder_;  // E_c over BCG features
    nn::Linear mu_head_, log_sigma_head_;
    gcn::TripletGcn decoder_;  // D_l over updated features
    nn::Mlp box_head_;
};

}  // namespace scenegen::layout

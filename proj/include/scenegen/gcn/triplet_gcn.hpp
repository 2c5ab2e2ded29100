// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "scenegen/core/nn.hpp"

namespace scenegen::gcn {

struct TripletGcnConfig {
    int num_layers = 5;
    int hidden = 512;       // node feature width inside the stack
    int edge_hidden = 512;  // edge feature width inside the stack
    int node_in = 0;
    int edge_in = 0;
    int node_out = 0;  // 0 keeps the hidden width (no output projection)
    int edge_out = 0;

    void validate() const;
};

/// Message-passing network over (node, edge, node) triplets. Each layer runs
/// a shared per-edge MLP g1 that rewrites the triplet, pools the per-edge
/// node messages into per-node ones, and applies the residual update
/// phi' = psi + g2(AVG(neighbor psi)). Neighborhoods are direction-agnostic;
/// an empty neighborhood averages to the zero vector, and a node with no
/// incident edges carries its feature through as its own message.
class TripletGcn {
public:
    TripletGcn() = default;
    TripletGcn(nn::ParamStore& ps, const std::string& prefix, const TripletGcnConfig& cfg,
               Rng& rng);

    struct Messages {
        ad::Var psi_src;   // [E, hidden]
        ad::Var edge_out;  // [E, edge_hidden]
        ad::Var psi_dst;   // [E, hidden]
    };

    /// g1 on gathered triplet features (one row per edge).
    Messages message_pass(const ad::Var& src_feats, const ad::Var& edge_feats,
                          const ad::Var& dst_feats, int layer) const;

    /// Residual update psi + g2(neighbor_mean) for one layer.
    ad::Var aggregate(const ad::Var& psi, const ad::Var& neighbor_mean, int layer) const;

    struct Output {
        ad::Var node_features;
        ad::Var edge_features;
    };
    /// src/dst hold node indices per edge. Features are index-aligned rows.
    Output forward(const std::vector<int>& src, const std::vector<int>& dst,
                   const ad::Var& node_feats, const ad::Var& edge_feats) const;

    const TripletGcnConfig& config() const { return cfg_; }

private:
    TripletGcnConfig cfg_;
    nn::Linear node_proj_, edge_proj_;
    std::vector<nn::Mlp> g1_, g2_;
    nn::Linear node_out_, edge_out_;
    bool has_node_out_ = false, has_edge_out_ = false;
};

}  // namespace scenegen::gcn

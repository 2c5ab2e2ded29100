// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/gcn/triplet_gcn.hpp"

#include "scenegen/core/error.hpp"

namespace scenegen::gcn {

using ad::Var;

void TripletGcnConfig::validate() const {
    if (num_layers < 1) throw ConfigError("triplet gcn needs at least one layer");
    if (hidden < 1 || edge_hidden < 1 || node_in < 1 || edge_in < 1)
        throw ConfigError("triplet gcn dims must be positive");
}

TripletGcn::TripletGcn(nn::ParamStore& ps, const std::string& prefix,
                       const TripletGcnConfig& cfg, Rng& rng)
    : cfg_(cfg) {
    cfg.validate();
    node_proj_ = nn::Linear(ps, prefix + ".node_proj", cfg.node_in, cfg.hidden, rng);
    edge_proj_ = nn::Linear(ps, prefix + ".edge_proj", cfg.edge_in, cfg.edge_hidden, rng);
    int tri = 2 * cfg.hidden + cfg.edge_hidden;
    for (int l = 0; l < cfg.num_layers; ++l) {
        g1_.emplace_back(ps, prefix + ".g1." + std::to_string(l),
                         std::vector<int>{tri, cfg.hidden, tri}, rng);
        g2_.emplace_back(ps, prefix + ".g2." + std::to_string(l),
                         std::vector<int>{cfg.hidden, cfg.hidden, cfg.hidden}, rng);
    }
    if (cfg.node_out > 0 && cfg.node_out != cfg.hidden) {
        node_out_ = nn::Linear(ps, prefix + ".node_out", cfg.hidden, cfg.node_out, rng);
        has_node_out_ = true;
    }
    if (cfg.edge_out > 0 && cfg.edge_out != cfg.edge_hidden) {
        edge_out_ = nn::Linear(ps, prefix + ".edge_out", cfg.edge_hidden, cfg.edge_out, rng);
        has_edge_out_ = true;
    }
}

TripletGcn::Messages TripletGcn::message_pass(const Var& src_feats, const Var& edge_feats,
                                              const Var& dst_feats, int layer) const {
    Var tri = ad::concat_cols({src_feats, edge_feats, dst_feats});
    Var out = g1_[static_cast<size_t>(layer)].forward(tri);
    Messages m;
    m.psi_src = ad::slice_cols(out, 0, cfg_.hidden);
    m.edge_out = ad::slice_cols(out, cfg_.hidden, cfg_.edge_hidden);
    m.psi_dst = ad::slice_cols(out, cfg_.hidden + cfg_.edge_hidden, cfg_.hidden);
    return m;
}

Var TripletGcn::aggregate(const Var& psi, const Var& neighbor_mean, int layer) const {
    return ad::add(psi, g2_[static_cast<size_t>(layer)].forward(neighbor_mean));
}

TripletGcn::Output TripletGcn::forward(const std::vector<int>& src, const std::vector<int>& dst,
                                       const Var& node_feats, const Var& edge_feats) const {
    const int N = node_feats.value().rows();
    const int E = static_cast<int>(src.size());
    if (node_feats.value().cols() != cfg_.node_in)
        throw ShapeError("triplet gcn: node feature dim " + node_feats.value().shape_str() +
                         " does not match configured input " + std::to_string(cfg_.node_in));
    if (E > 0 && edge_feats.value().cols() != cfg_.edge_in)
        throw ShapeError("triplet gcn: edge feature dim mismatch");

    // per-node incidence counts (psi pooling) and degree-based scales
    std::vector<double> inv_count(static_cast<size_t>(N), 0.0);
    std::vector<double> iso(static_cast<size_t>(N), 0.0);
    for (int e = 0; e < E; ++e) {
        inv_count[static_cast<size_t>(src[static_cast<size_t>(e)])] += 1.0;
        inv_count[static_cast<size_t>(dst[static_cast<size_t>(e)])] += 1.0;
    }
    for (int i = 0; i < N; ++i) {
        if (inv_count[static_cast<size_t>(i)] > 0)
            inv_count[static_cast<size_t>(i)] = 1.0 / inv_count[static_cast<size_t>(i)];
        else
            iso[static_cast<size_t>(i)] = 1.0;  // isolated node: psi = phi
    }
    std::vector<int> both;  // src rows then dst rows, for scatter pooling
    both.reserve(2 * static_cast<size_t>(E));
    both.insert(both.end(), src.begin(), src.end());
    both.insert(both.end(), dst.begin(), dst.end());

    Var nodes = node_proj_.forward(node_feats);
    Var edges = E > 0 ? edge_proj_.forward(edge_feats)
                      : ad::constant(Tensor({0, cfg_.edge_hidden}));

    for (int l = 0; l < cfg_.num_layers; ++l) {
        Var psi;
        if (E > 0) {
            Messages m = message_pass(ad::gather_rows(nodes, src), edges,
                                      ad::gather_rows(nodes, dst), l);
            edges = m.edge_out;
            // pool per-edge node messages into per-node psi (mean over
            // incident edges); isolated nodes keep their feature
            Var stacked = ad::concat_rows({m.psi_src, m.psi_dst});
            Var pooled = ad::row_scale(ad::scatter_add_rows(stacked, both, N), inv_count);
            psi = ad::add(pooled, ad::row_scale(nodes, iso));
            // direction-agnostic neighbor mean of pooled psi
            Var from_dst = ad::gather_rows(psi, dst);  // contribution to src nodes
            Var from_src = ad::gather_rows(psi, src);  // contribution to dst nodes
            Var nb_sum = ad::add(ad::scatter_add_rows(from_dst, src, N),
                                 ad::scatter_add_rows(from_src, dst, N));
            Var nb_mean = ad::row_scale(nb_sum, inv_count);
            nodes = aggregate(psi, nb_mean, l);
        } else {
            // no edges: psi = phi, neighbor mean is zero
            nodes = aggregate(nodes, ad::constant(Tensor({N, cfg_.hidden})), l);
        }
    }

    Output out;
    out.node_features = has_node_out_ ? node_out_.forward(nodes) : nodes;
    out.edge_features = (E > 0 && has_edge_out_) ? edge_out_.forward(edges) : edges;
    return out;
}

}  // namespace scenegen::gcn

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/layout/layout.hpp"

#include <cmath>

#include "scenegen/core/error.hpp"

namespace scenegen::layout {

using ad::Var;

LayoutBranch::LayoutBranch(nn::ParamStore& ps, const context::ContextBuilder& ctx,
                           const LayoutConfig& cfg, Rng& rng)
    : ctx_(ctx), cfg_(cfg) {
    gcn::TripletGcnConfig enc;
    enc.num_layers = cfg.gcn_layers;
    enc.hidden = cfg.gcn_hidden;
    enc.edge_hidden = cfg.gcn_hidden;
    enc.node_in = ctx.node_feature_dim(/*with_boxes=*/true);
    enc.edge_in = ctx.edge_feature_dim();
    encoder_ = gcn::TripletGcn(ps, "layout.encoder", enc, rng);

    mu_head_ = nn::Linear(ps, "layout.mu_head", cfg.gcn_hidden, cfg.latent_dim, rng);
    log_sigma_head_ = nn::Linear(ps, "layout.log_sigma_head", cfg.gcn_hidden, cfg.latent_dim, rng);

    gcn::TripletGcnConfig dec;
    dec.num_layers = cfg.gcn_layers;
    dec.hidden = cfg.gcn_hidden;
    dec.edge_hidden = cfg.gcn_hidden;
    dec.node_in = updated_feature_dim();
    dec.edge_in = ctx.edge_feature_dim();
    decoder_ = gcn::TripletGcn(ps, "layout.decoder", dec, rng);

    box_head_ = nn::Mlp(ps, "layout.box_head",
                        {cfg.gcn_hidden, cfg.head_hidden, 6 + cfg.rotation_bins}, rng);
}

int LayoutBranch::updated_feature_dim() const {
    return cfg_.latent_dim + ctx_.node_feature_dim(/*with_boxes=*/false);
}

PosteriorBatch LayoutBranch::encode_posterior(const context::GraphFeatures& bcg) const {
    if (!bcg.has_boxes)
        throw ModeError("encode_posterior needs training-mode features (boxes present)");
    auto enc = encoder_.forward(bcg.src, bcg.dst, bcg.node_features, bcg.edge_features);
    PosteriorBatch q;
    q.mu = mu_head_.forward(enc.node_features);
    q.log_sigma = log_sigma_head_.forward(enc.node_features);
    for (int64_t i = 0; i < q.mu.size(); ++i)
        if (!std::isfinite(q.mu.value()[i]) || !std::isfinite(q.log_sigma.value()[i]))
            throw NumericError("posterior produced non-finite parameters");
    return q;
}

Var LayoutBranch::kl_loss(const PosteriorBatch& q) const {
    // 0.5 * sum_k (mu^2 + sigma^2 - 1 - log sigma^2), averaged over nodes
    Var mu2 = ad::square(q.mu);
    Var sigma2 = ad::exp_(ad::scale(q.log_sigma, 2.0));
    Var term = ad::add_scalar(ad::sub(ad::add(mu2, sigma2), ad::scale(q.log_sigma, 2.0)), -1.0);
    return ad::scale(ad::mean(ad::rows_sum(term)), 0.5);
}

Var LayoutBranch::sample_latent(const PosteriorBatch& q, Rng& rng) const {
    Tensor eps(q.mu.value().shape());
    for (int64_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
    return ad::add(q.mu, ad::mul(ad::exp_(q.log_sigma), ad::constant(std::move(eps))));
}

Var LayoutBranch::sample_prior(int num_nodes, Rng& rng) const {
    Tensor z({num_nodes, cfg_.latent_dim});
    for (int64_t i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return ad::constant(std::move(z));
}

Var LayoutBranch::updated_node_features(const Var& z, const context::GraphFeatures& cg) const {
    // {z_i, p_i, o_i}: strip the box component if the features carry one
    Var po = cg.node_features;
    if (cg.has_boxes) po = ad::slice_cols(po, 0, ctx_.node_feature_dim(false));
    return ad::concat_cols({z, po});
}

LayoutPrediction LayoutBranch::decode_layout(const Var& updated_nodes,
                                             const context::GraphFeatures& cg) const {
    auto dec = decoder_.forward(cg.src, cg.dst, updated_nodes, cg.edge_features);
    Var raw = box_head_.forward(dec.node_features);
    LayoutPrediction out;
    out.sizes = ad::softplus(ad::slice_cols(raw, 0, 3));
    out.translations = ad::slice_cols(raw, 3, 3);
    out.logits = ad::slice_cols(raw, 6, cfg_.rotation_bins);
    return out;
}

Var LayoutBranch::layout_loss(const LayoutPrediction& pred,
                              const std::vector<graph::BoundingBox>& gt) const {
    const int n = pred.sizes.value().rows();
    if (static_cast<int>(gt.size()) != n)
        throw AlignmentError("layout_loss: prediction and ground truth misaligned");
    Tensor gt_s({n, 3}), gt_t({n, 3});
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            gt_s.at(i, k) = gt[static_cast<size_t>(i)].size[static_cast<size_t>(k)];
            gt_t.at(i, k) = gt[static_cast<size_t>(i)].translation[static_cast<size_t>(k)];
        }
        labels[static_cast<size_t>(i)] = gt[static_cast<size_t>(i)].bin_label;
    }
    Var l1_s = ad::mean(ad::rows_sum(ad::abs_(ad::sub(pred.sizes, ad::constant(std::move(gt_s))))));
    Var l1_t =
        ad::mean(ad::rows_sum(ad::abs_(ad::sub(pred.translations, ad::constant(std::move(gt_t))))));
    Var ce = ad::cross_entropy_mean(pred.logits, labels);
    return ad::add(ad::add(l1_s, l1_t), ce);
}

std::vector<graph::BoundingBox> LayoutBranch::assemble_layout(const LayoutPrediction& pred) const {
    const int n = pred.sizes.value().rows();
    std::vector<graph::BoundingBox> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int b = 1; b < cfg_.rotation_bins; ++b)
            if (pred.logits.value().at(i, b) > pred.logits.value().at(i, best)) best = b;
        std::array<double, 3> s{}, t{};
        for (int k = 0; k < 3; ++k) {
            s[static_cast<size_t>(k)] = pred.sizes.value().at(i, k);
            t[static_cast<size_t>(k)] = pred.translations.value().at(i, k);
        }
        out.push_back(graph::BoundingBox::make(
            s, t, graph::bin_center(best, cfg_.rotation_bins), cfg_.rotation_bins));
    }
    return out;
}

}  // namespace scenegen::layout

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "scenegen/core/error.hpp"
#include "scenegen/graph/synth.hpp"
#include "scenegen/layout/layout.hpp"
#include "test_util.hpp"

using namespace scenegen;
using namespace scenegen::ad;
using namespace scenegen::layout;
using scenegen::graph::Vocabulary;

namespace {

const Vocabulary& vocab() { return Vocabulary::load_default(); }

struct Fixture {
    Rng rng{17};
    nn::ParamStore ps;
    context::HashedTextProvider provider{16};
    context::ContextConfig ctx_cfg;
    std::unique_ptr<context::ContextBuilder> ctx;
    LayoutConfig cfg;
    std::unique_ptr<LayoutBranch> branch;
    graph::Scene scene;

    Fixture() {
        ctx_cfg.node_embed_dim = 8;
        ctx_cfg.edge_embed_dim = 8;
        ctx_cfg.box_embed_dim = 8;
        ctx_cfg.box_hidden = 8;
        ctx = std::make_unique<context::ContextBuilder>(ps, vocab(), provider, ctx_cfg, rng);
        cfg.latent_dim = 8;
        cfg.rotation_bins = 24;
        cfg.gcn_layers = 2;
        cfg.gcn_hidden = 16;
        cfg.head_hidden = 16;
        branch = std::make_unique<LayoutBranch>(ps, *ctx, cfg, rng);
        graph::SynthOptions opt;
        opt.min_objects = 4;
        opt.max_objects = 6;
        scene = graph::random_scene(rng, vocab(), opt);
    }
};

}  // namespace

TEST_CASE("encode_posterior shapes, mode error, zero-head edge case") {
    Fixture f;
    auto bcg = f.ctx->build_bcg(f.scene.graph, &f.scene.boxes);
    auto q = f.branch->encode_posterior(bcg);
    const int n = static_cast<int>(f.scene.graph.nodes.size());
    CHECK(q.mu.shape() == std::vector<int>{n, 8});
    CHECK(q.log_sigma.shape() == std::vector<int>{n, 8});

    auto cg = f.ctx->build_bcg(f.scene.graph, nullptr);
    CHECK_THROWS_AS(f.branch->encode_posterior(cg), ModeError);

    // zero-weight heads give the standard normal
    f.ps.get("layout.mu_head.W").value().fill(0.0);
    f.ps.get("layout.mu_head.b").value().fill(0.0);
    f.ps.get("layout.log_sigma_head.W").value().fill(0.0);
    f.ps.get("layout.log_sigma_head.b").value().fill(0.0);
    auto q0 = f.branch->encode_posterior(bcg);
    for (int64_t i = 0; i < q0.mu.size(); ++i) {
        CHECK(q0.mu.value()[i] == 0.0);
        CHECK(q0.log_sigma.value()[i] == 0.0);
    }
    CHECK(f.branch->kl_loss(q0).value()[0] == doctest::Approx(0.0));
}

TEST_CASE("posterior depends on boxes (gradient probe through the box path)") {
    Fixture f;
    Tensor raw({static_cast<int>(f.scene.boxes.size()), 7});
    for (size_t i = 0; i < f.scene.boxes.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            raw.at(static_cast<int>(i), k) = f.scene.boxes[i].size[static_cast<size_t>(k)];
            raw.at(static_cast<int>(i), 3 + k) =
                f.scene.boxes[i].translation[static_cast<size_t>(k)];
        }
        raw.at(static_cast<int>(i), 6) = f.scene.boxes[i].yaw;
    }
    Var raw_boxes = leaf(std::move(raw), true);

    // assemble BCG by hand so the box rows stay differentiable
    auto cg = f.ctx->build_bcg(f.scene.graph, nullptr);
    Var nodes = concat_cols({cg.node_features, f.ctx->encode_box_features(raw_boxes)});
    context::GraphFeatures bcg = cg;
    bcg.node_features = nodes;
    bcg.has_boxes = true;

    auto q = f.branch->encode_posterior(bcg);
    backward(mean(square(q.mu)));
    REQUIRE(raw_boxes.node()->grad_ready);
    double g = 0;
    for (int64_t i = 0; i < raw_boxes.grad().size(); ++i) g += std::fabs(raw_boxes.grad()[i]);
    CHECK(g > 0.0);
}

TEST_CASE("box encoder gradient w.r.t. inputs matches finite differences") {
    Fixture f;
    Var raw = testutil::random_leaf({3, 7}, f.rng);
    auto loss = [&] { return mean(square(f.ctx->encode_box_features(raw))); };
    CHECK(testutil::fd_max_rel_err(loss, raw, f.rng, 10) < 1e-4);
}

TEST_CASE("kl closed form: exact values and Monte-Carlo agreement") {
    Fixture f;
    // mu=0 sigma=1 -> 0 handled above; single dim mu=1 sigma=1 -> 0.5
    PosteriorBatch q;
    q.mu = constant(Tensor({1, 1}, {1.0}));
    q.log_sigma = constant(Tensor({1, 1}, {0.0}));
    CHECK(f.branch->kl_loss(q).value()[0] == doctest::Approx(0.5));

    Rng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        const int d = 4;
        Tensor mu({1, d}), ls({1, d});
        for (int k = 0; k < d; ++k) {
            mu[k] = rng.uniform(-1.5, 1.5);
            ls[k] = rng.uniform(-0.8, 0.6);
        }
        PosteriorBatch qq{constant(mu), constant(ls)};
        double closed = f.branch->kl_loss(qq).value()[0];

        double mc = 0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) {
                double eps = rng.normal();
                double sigma = std::exp(ls[k]);
                double z = mu[k] + sigma * eps;
                mc += -0.5 * eps * eps - ls[k] + 0.5 * z * z;
            }
        }
        mc /= n;
        CHECK(std::fabs(mc - closed) / std::max(closed, 1e-9) < 0.02);
    }
}

TEST_CASE("sample_latent: sigma->0 limit, reproducibility, statistics") {
    Fixture f;
    const int n = 6, d = 8;
    Tensor mu({n, d}), ls({n, d});
    Rng rng(9);
    for (int64_t i = 0; i < mu.size(); ++i) {
        mu[i] = rng.normal();
        ls[i] = -40.0;  // sigma ~ 4e-18
    }
    PosteriorBatch q{constant(mu), constant(ls)};
    Rng s1(3), s2(3);
    Var z1 = f.branch->sample_latent(q, s1);
    Var z2 = f.branch->sample_latent(q, s2);
    for (int64_t i = 0; i < z1.size(); ++i) {
        CHECK(z1.value()[i] == doctest::Approx(mu[i]));
        CHECK(z1.value()[i] == z2.value()[i]);  // same seed, same draw
    }

    // mean of many draws approaches mu within 3 sigma / sqrt(n)
    Tensor mu1({1, 1}, {0.7}), ls1({1, 1}, {std::log(0.5)});
    PosteriorBatch q1{constant(mu1), constant(ls1)};
    Rng s3(11);
    double acc = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) acc += f.branch->sample_latent(q1, s3).value()[0];
    acc /= draws;
    CHECK(std::fabs(acc - 0.7) < 3.0 * 0.5 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("decode_layout shapes and determinism") {
    Fixture f;
    auto bcg = f.ctx->build_bcg(f.scene.graph, &f.scene.boxes);
    auto q = f.branch->encode_posterior(bcg);
    Rng s(4);
    Var z = f.branch->sample_latent(q, s);
    Var up = f.branch->updated_node_features(z, bcg);
    CHECK(up.value().cols() == f.branch->updated_feature_dim());

    auto pred = f.branch->decode_layout(up, bcg);
    const int n = static_cast<int>(f.scene.graph.nodes.size());
    CHECK(pred.sizes.shape() == std::vector<int>{n, 3});
    CHECK(pred.translations.shape() == std::vector<int>{n, 3});
    CHECK(pred.logits.shape() == std::vector<int>{n, 24});
    for (int64_t i = 0; i < pred.sizes.size(); ++i) CHECK(pred.sizes.value()[i] > 0.0);

    auto pred2 = f.branch->decode_layout(up, bcg);
    for (int64_t i = 0; i < pred.logits.size(); ++i)
        CHECK(pred.logits.value()[i] == pred2.logits.value()[i]);

    auto boxes = f.branch->assemble_layout(pred);
    CHECK(boxes.size() == static_cast<size_t>(n));
    for (const auto& b : boxes) {
        CHECK(b.bin_label >= 0);
        CHECK(b.bin_label < 24);
    }
}

TEST_CASE("layout_loss exact values and gradient") {
    Fixture f;
    const int n = 4;
    std::vector<graph::BoundingBox> gt;
    Rng rng(13);
    for (int i = 0; i < n; ++i)
        gt.push_back(graph::BoundingBox::make(
            {rng.uniform(0.3, 2), rng.uniform(0.3, 2), rng.uniform(0.3, 2)},
            {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 1)},
            rng.uniform(0, 2 * std::numbers::pi), 24));

    // perfect prediction with saturated logits
    Tensor s({n, 3}), t({n, 3}), logits({n, 24});
    logits.fill(-20.0);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            s.at(i, k) = gt[static_cast<size_t>(i)].size[static_cast<size_t>(k)];
            t.at(i, k) = gt[static_cast<size_t>(i)].translation[static_cast<size_t>(k)];
        }
        logits.at(i, gt[static_cast<size_t>(i)].bin_label) = 20.0;
    }
    LayoutPrediction perfect{constant(s), constant(t), constant(logits)};
    CHECK(f.branch->layout_loss(perfect, gt).value()[0] < 1e-6);

    // one axis off by a meter adds exactly 1/N
    Tensor s_off = s;
    s_off.at(1, 2) += 1.0;
    LayoutPrediction off{constant(s_off), constant(t), constant(logits)};
    CHECK(f.branch->layout_loss(off, gt).value()[0] ==
          doctest::Approx(1.0 / n).epsilon(1e-6));

    // gradient vs finite differences at a generic point
    Var ps = testutil::random_leaf({n, 3}, f.rng, 0.5);
    Var pt = testutil::random_leaf({n, 3}, f.rng);
    Var pl = testutil::random_leaf({n, 24}, f.rng);
    auto loss = [&] {
        LayoutPrediction p{softplus(ps), pt, pl};
        return f.branch->layout_loss(p, gt);
    };
    CHECK(testutil::fd_max_rel_err(loss, ps, f.rng, 10) < 1e-4);
    CHECK(testutil::fd_max_rel_err(loss, pt, f.rng, 10) < 1e-4);
    CHECK(testutil::fd_max_rel_err(loss, pl, f.rng, 10) < 1e-4);

    std::vector<graph::BoundingBox> short_gt(gt.begin(), gt.end() - 1);
    CHECK_THROWS_AS(f.branch->layout_loss(perfect, short_gt), AlignmentError);
}

TEST_CASE("layout_loss is invariant to consistent node reordering") {
    Fixture f;
    const int n = 5;
    Rng rng(21);
    std::vector<graph::BoundingBox> gt;
    for (int i = 0; i < n; ++i)
        gt.push_back(graph::BoundingBox::make({1, 1, 1}, {rng.normal(), rng.normal(), 1}, 0.3 * i,
                                              24));
    Var ps = testutil::random_leaf({n, 3}, rng, 0.5);
    Var pt = testutil::random_leaf({n, 3}, rng);
    Var pl = testutil::random_leaf({n, 24}, rng);
    LayoutPrediction p{softplus(ps), pt, pl};
    double base = f.branch->layout_loss(p, gt).value()[0];

    std::vector<int> perm = {4, 2, 0, 3, 1};
    std::vector<graph::BoundingBox> gt_p;
    for (int i : perm) gt_p.push_back(gt[static_cast<size_t>(i)]);
    LayoutPrediction pp{gather_rows(softplus(ps), perm), gather_rows(pt, perm),
                        gather_rows(pl, perm)};
    CHECK(f.branch->layout_loss(pp, gt_p).value()[0] == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("assemble_layout decodes the argmax bin center") {
    Fixture f;
    Tensor s({1, 3}, {-0.5, 0.2, 1.0});  // raw sizes may be negative before the positivity map
    Tensor t({1, 3}, {1, 2, 3});
    Tensor logits({1, 24});
    logits.fill(0.0);
    logits.at(0, 18) = 5.0;
    LayoutPrediction pred{softplus(constant(s)), constant(t), constant(logits)};
    auto boxes = f.branch->assemble_layout(pred);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].yaw == doctest::Approx(18.5 * 2 * std::numbers::pi / 24));
    CHECK(boxes[0].bin_label == 18);
    for (double v : boxes[0].size) CHECK(v > 0.0);
}

TEST_CASE("kl_loss is nonnegative and zero only at the standard normal") {
    Fixture f;
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        Tensor mu({1, 3}), ls({1, 3});
        for (int k = 0; k < 3; ++k) {
            mu[k] = rng.uniform(-2, 2);
            ls[k] = rng.uniform(-1, 1);
        }
        PosteriorBatch q{constant(mu), constant(ls)};
        double v = f.branch->kl_loss(q).value()[0];
        CHECK(v >= -1e-12);
        double dev = 0;
        for (int k = 0; k < 3; ++k) dev += std::fabs(mu[k]) + std::fabs(ls[k]);
        if (dev > 0.1) CHECK(v > 1e-4);
    }
}

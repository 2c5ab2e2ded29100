// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "scenegen/gcn/triplet_gcn.hpp"
#include "test_util.hpp"

using namespace scenegen;
using namespace scenegen::ad;
using namespace scenegen::gcn;
using testutil::random_leaf;

namespace {

struct RandomGraph {
    std::vector<int> src, dst;
    Var nodes, edges;
    int n;
};

RandomGraph random_graph(Rng& rng, int n, int e, int node_dim, int edge_dim,
                         bool connected = true) {
    RandomGraph g;
    g.n = n;
    if (connected) {
        // spanning chain first, then random extra edges
        for (int i = 1; i < n; ++i) {
            g.src.push_back(i - 1);
            g.dst.push_back(i);
        }
        e = std::max(0, e - (n - 1));
    }
    for (int k = 0; k < e; ++k) {
        int a = static_cast<int>(rng.uniform_int(n));
        int b = static_cast<int>(rng.uniform_int(n));
        if (a == b) b = (b + 1) % n;
        g.src.push_back(a);
        g.dst.push_back(b);
    }
    g.nodes = random_leaf({n, node_dim}, rng);
    g.edges = random_leaf({static_cast<int>(g.src.size()), edge_dim}, rng);
    return g;
}

TripletGcnConfig small_cfg(int layers, int node_in, int edge_in, int hidden = 16) {
    TripletGcnConfig cfg;
    cfg.num_layers = layers;
    cfg.hidden = hidden;
    cfg.edge_hidden = hidden;
    cfg.node_in = node_in;
    cfg.edge_in = edge_in;
    return cfg;
}

}  // namespace

TEST_CASE("message_pass shapes and zero-weight behavior") {
    Rng rng(1);
    nn::ParamStore ps;
    TripletGcn net(ps, "g", small_cfg(1, 6, 4), rng);

    Var si = random_leaf({5, 16}, rng);
    Var ef = random_leaf({5, 16}, rng);
    Var di = random_leaf({5, 16}, rng);
    auto m = net.message_pass(si, ef, di, 0);
    CHECK(m.psi_src.shape() == std::vector<int>{5, 16});
    CHECK(m.edge_out.shape() == std::vector<int>{5, 16});
    CHECK(m.psi_dst.shape() == std::vector<int>{5, 16});

    // zero weights make g1 vanish
    for (auto& [name, v] : ps.all())
        if (name.find(".g1.") != std::string::npos) v.node()->value.fill(0.0);
    auto z = net.message_pass(si, ef, di, 0);
    for (int64_t i = 0; i < z.psi_src.size(); ++i) CHECK(z.psi_src.value()[i] == 0.0);
}

TEST_CASE("aggregate implements the residual update") {
    Rng rng(2);
    nn::ParamStore ps;
    TripletGcn net(ps, "g", small_cfg(1, 6, 4, 8), rng);

    Var psi = random_leaf({3, 8}, rng);
    // empty neighborhood: AVG defined as zero
    Var zero = constant(Tensor({3, 8}));
    Var out = net.aggregate(psi, zero, 0);
    // phi' - psi must equal g2(0), identical across rows
    for (int r = 1; r < 3; ++r)
        for (int c = 0; c < 8; ++c)
            CHECK(out.value().at(r, c) - psi.value().at(r, c) ==
                  doctest::Approx(out.value().at(0, c) - psi.value().at(0, c)));

    // single neighbor: AVG is that neighbor's psi; duplicated features
    // average to the same value
    Var u = random_leaf({1, 8}, rng);
    Var once = net.aggregate(gather_rows(psi, {0}), u, 0);
    Tensor dup_t({1, 8});
    for (int c = 0; c < 8; ++c) dup_t.at(0, c) = (u.value().at(0, c) + u.value().at(0, c)) / 2.0;
    Var dup = net.aggregate(gather_rows(psi, {0}), constant(dup_t), 0);
    for (int64_t i = 0; i < once.size(); ++i)
        CHECK(once.value()[i] == doctest::Approx(dup.value()[i]).epsilon(1e-12));
}

TEST_CASE("forward on L=1 equals manual message_pass + aggregate composition") {
    Rng rng(3);
    nn::ParamStore ps;
    auto cfg = small_cfg(1, 5, 3, 8);
    TripletGcn net(ps, "g", cfg, rng);

    // two nodes, one edge 0 -> 1
    Var nodes = random_leaf({2, 5}, rng);
    Var edges = random_leaf({1, 3}, rng);
    auto out = net.forward({0}, {1}, nodes, edges);

    nn::Linear nproj(ps, "g.node_proj", 5, 8, rng);
    nn::Linear eproj(ps, "g.edge_proj", 3, 8, rng);
    Var h = nproj.forward(nodes);
    Var he = eproj.forward(edges);
    auto m = net.message_pass(slice_cols(gather_rows(h, {0}), 0, 8), he,
                              gather_rows(h, {1}), 0);
    // each node has exactly one incident edge: psi is the per-edge message
    Var phi0 = net.aggregate(m.psi_src, m.psi_dst, 0);
    Var phi1 = net.aggregate(m.psi_dst, m.psi_src, 0);

    for (int c = 0; c < 8; ++c) {
        CHECK(out.node_features.value().at(0, c) == doctest::Approx(phi0.value().at(0, c)));
        CHECK(out.node_features.value().at(1, c) == doctest::Approx(phi1.value().at(0, c)));
        CHECK(out.edge_features.value().at(0, c) == doctest::Approx(m.edge_out.value().at(0, c)));
    }
}

TEST_CASE("permutation equivariance for L in {1,3,5}") {
    Rng rng(4);
    for (int L : {1, 3, 5}) {
        nn::ParamStore ps;
        TripletGcn net(ps, "g", small_cfg(L, 6, 4, 12), rng);
        for (int trial = 0; trial < 7; ++trial) {
            int n = 3 + static_cast<int>(rng.uniform_int(5));
            auto g = random_graph(rng, n, n + 2, 6, 4);
            auto base = net.forward(g.src, g.dst, g.nodes, g.edges);

            // random permutation: node i moves to row perm[i]
            std::vector<int> perm(static_cast<size_t>(n));
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = n - 1; i > 0; --i)
                std::swap(perm[static_cast<size_t>(i)],
                          perm[static_cast<size_t>(rng.uniform_int(i + 1))]);
            std::vector<int> inv(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) inv[static_cast<size_t>(perm[static_cast<size_t>(i)])] = i;

            Var pn = gather_rows(g.nodes, inv);
            std::vector<int> psrc, pdst;
            for (size_t e = 0; e < g.src.size(); ++e) {
                psrc.push_back(perm[static_cast<size_t>(g.src[e])]);
                pdst.push_back(perm[static_cast<size_t>(g.dst[e])]);
            }
            auto permuted = net.forward(psrc, pdst, pn, g.edges);

            double max_dev = 0;
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < 12; ++c)
                    max_dev = std::max(
                        max_dev,
                        std::fabs(permuted.node_features.value().at(perm[static_cast<size_t>(i)], c) -
                                  base.node_features.value().at(i, c)));
            for (int64_t i = 0; i < base.edge_features.size(); ++i)
                max_dev = std::max(max_dev, std::fabs(permuted.edge_features.value()[i] -
                                                      base.edge_features.value()[i]));
            CHECK(max_dev < 1e-5);
        }
    }
}

TEST_CASE("no-edge graph uses only the residual path") {
    Rng rng(5);
    nn::ParamStore ps;
    TripletGcn net(ps, "g", small_cfg(2, 4, 3, 8), rng);
    Var nodes = random_leaf({3, 4}, rng);
    auto out = net.forward({}, {}, nodes, constant(Tensor({0, 3})));
    CHECK(out.node_features.value().rows() == 3);

    // manual: phi = proj(x); twice phi = phi + g2(0)
    nn::Linear nproj(ps, "g.node_proj", 4, 8, rng);
    Var phi = nproj.forward(nodes);
    for (int l = 0; l < 2; ++l) phi = net.aggregate(phi, constant(Tensor({3, 8})), l);
    for (int64_t i = 0; i < phi.size(); ++i)
        CHECK(out.node_features.value()[i] == doctest::Approx(phi.value()[i]));
}

TEST_CASE("forward jacobian matches finite differences") {
    Rng rng(6);
    nn::ParamStore ps;
    TripletGcn net(ps, "g", small_cfg(2, 5, 4, 10), rng);
    auto g = random_graph(rng, 4, 6, 5, 4);

    auto loss = [&] {
        auto out = net.forward(g.src, g.dst, g.nodes, g.edges);
        return add(mean(square(out.node_features)), mean(square(out.edge_features)));
    };
    CHECK(testutil::fd_max_rel_err(loss, g.nodes, rng, 10) < 1e-4);
    CHECK(testutil::fd_max_rel_err(loss, g.edges, rng, 10) < 1e-4);
    CHECK(testutil::fd_max_rel_err(loss, ps.get("g.g1.0.l0.W"), rng, 10) < 1e-4);
    CHECK(testutil::fd_max_rel_err(loss, ps.get("g.g2.1.l1.W"), rng, 10) < 1e-4);
}

TEST_CASE("every parameter receives gradient on a connected graph") {
    Rng rng(7);
    nn::ParamStore ps;
    TripletGcn net(ps, "g", small_cfg(3, 5, 4, 8), rng);
    auto g = random_graph(rng, 5, 8, 5, 4, /*connected=*/true);

    auto out = net.forward(g.src, g.dst, g.nodes, g.edges);
    Var loss = add(mean(square(out.node_features)), mean(square(out.edge_features)));
    backward(loss);
    for (const auto& [name, v] : ps.all()) {
        REQUIRE_MESSAGE(v.node()->grad_ready, name);
        double norm = 0;
        for (int64_t i = 0; i < v.grad().size(); ++i) norm += v.grad()[i] * v.grad()[i];
        CHECK_MESSAGE(norm > 0.0, name);
    }
}

TEST_CASE("forward is deterministic") {
    Rng rng(8);
    nn::ParamStore ps;
    TripletGcn net(ps, "g", small_cfg(2, 5, 4, 8), rng);
    auto g = random_graph(rng, 4, 5, 5, 4);
    auto a = net.forward(g.src, g.dst, g.nodes, g.edges);
    auto b = net.forward(g.src, g.dst, g.nodes, g.edges);
    for (int64_t i = 0; i < a.node_features.size(); ++i)
        CHECK(a.node_features.value()[i] == b.node_features.value()[i]);
}

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/core/nn.hpp"

#include <cmath>

#include "scenegen/core/error.hpp"

namespace scenegen::nn {

Var ParamStore::get_or_create(const std::string& name, std::vector<int> shape,
                              const std::function<void(Tensor&, Rng&)>& init, Rng& rng) {
    auto it = params_.find(name);
    if (it != params_.end()) {
        if (it->second.value().shape() != shape)
            throw ShapeError("parameter '" + name + "' exists with shape " +
                             it->second.value().shape_str());
        return it->second;
    }
    Tensor t(shape);
    init(t, rng);
    Var v = ad::leaf(std::move(t), true);
    params_.emplace(name, v);
    return v;
}

Var ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::insert_raw(const std::string& name, Tensor t) {
    params_.insert_or_assign(name, ad::leaf(std::move(t), true));
}

void ParamStore::zero_grads() {
    for (auto& [name, v] : params_) v.node()->clear_grad();
}

int64_t ParamStore::total_size() const {
    int64_t n = 0;
    for (const auto& [name, v] : params_) n += v.size();
    return n;
}

std::function<void(Tensor&, Rng&)> init_zeros() {
    return [](Tensor&, Rng&) {};
}

std::function<void(Tensor&, Rng&)> init_normal(double stddev) {
    return [stddev](Tensor& t, Rng& rng) {
        for (int64_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal();
    };
}

std::function<void(Tensor&, Rng&)> init_fan_in(int fan_in) {
    return init_normal(1.0 / std::sqrt(static_cast<double>(fan_in)));
}

Linear::Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng,
               bool zero_init) {
    auto winit = zero_init ? init_zeros() : init_fan_in(in);
    W = ps.get_or_create(prefix + ".W", {in, out}, winit, rng);
    b = ps.get_or_create(prefix + ".b", {out}, init_zeros(), rng);
}

Var Linear::forward(const Var& x) const { return ad::add_bias(ad::matmul(x, W), b); }

Mlp::Mlp(ParamStore& ps, const std::string& prefix, const std::vector<int>& dims, Rng& rng,
         bool activate_output)
    : activate_output(activate_output) {
    if (dims.size() < 2) throw ConfigError("Mlp: need at least [in, out] dims");
    for (size_t i = 0; i + 1 < dims.size(); ++i)
        layers.emplace_back(ps, prefix + ".l" + std::to_string(i), dims[i], dims[i + 1], rng);
}

Var Mlp::forward(Var x) const {
    for (size_t i = 0; i < layers.size(); ++i) {
        x = layers[i].forward(x);
        if (i + 1 < layers.size() || activate_output) x = ad::silu(x);
    }
    return x;
}

Conv3dLayer::Conv3dLayer(ParamStore& ps, const std::string& prefix, int cin, int cout, int k,
                         int stride, int pad, Rng& rng)
    : stride(stride), pad(pad) {
    W = ps.get_or_create(prefix + ".W", {cout, cin, k, k, k}, init_fan_in(cin * k * k * k), rng);
    b = ps.get_or_create(prefix + ".b", {cout}, init_zeros(), rng);
}

ConvTranspose3dLayer::ConvTranspose3dLayer(ParamStore& ps, const std::string& prefix, int cin,
                                           int cout, int k, int stride, int pad, Rng& rng)
    : stride(stride), pad(pad) {
    W = ps.get_or_create(prefix + ".W", {cin, cout, k, k, k}, init_fan_in(cin * k * k * k), rng);
    b = ps.get_or_create(prefix + ".b", {cout}, init_zeros(), rng);
}

double AdamW::step(ParamStore& ps) {
    double sq = 0.0;
    for (const auto& [name, v] : ps.all()) {
        ad::Node* n = v.node();
        if (!n->grad_ready) continue;
        for (int64_t i = 0; i < n->grad.size(); ++i) sq += n->grad[i] * n->grad[i];
    }
    double norm = std::sqrt(sq);
    double gscale = 1.0;
    if (cfg_.clip_norm > 0 && norm > cfg_.clip_norm) gscale = cfg_.clip_norm / norm;

    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, v] : ps.all()) {
        ad::Node* n = v.node();
        State& st = states_[name];
        if (st.m.empty()) {
            st.m = Tensor(n->value.shape());
            st.v = Tensor(n->value.shape());
        }
        for (int64_t i = 0; i < n->value.size(); ++i) {
            double g = n->grad_ready ? n->grad[i] * gscale : 0.0;
            st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
            st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = st.m[i] / bc1;
            double vhat = st.v[i] / bc2;
            n->value[i] -=
                cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * n->value[i]);
        }
    }
    ps.zero_grads();
    return norm;
}

}  // namespace scenegen::nn

// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scenegen/core/autodiff.hpp"
#include "scenegen/core/rng.hpp"

namespace scenegen::nn {

using ad::Var;

/// Named leaf tensors with gradients. Names are stable across runs so
/// checkpoints and optimizer state round-trip bitwise.
class ParamStore {
public:
    /// Fetch an existing parameter or create it with `init`. Shape conflicts
    /// with a preloaded checkpoint are an error.
    Var get_or_create(const std::string& name, std::vector<int> shape,
                      const std::function<void(Tensor&, Rng&)>& init, Rng& rng);

    bool has(const std::string& name) const { return params_.count(name) > 0; }
    Var get(const std::string& name) const;
    void insert_raw(const std::string& name, Tensor t);  // checkpoint load

    const std::map<std::string, Var>& all() const { return params_; }
    void zero_grads();
    int64_t total_size() const;

private:
    std::map<std::string, Var> params_;
};

// ---- initializers ----
std::function<void(Tensor&, Rng&)> init_zeros();
std::function<void(Tensor&, Rng&)> init_normal(double stddev);
std::function<void(Tensor&, Rng&)> init_fan_in(int fan_in);  // N(0, 1/sqrt(fan_in))

/// Dense layer y = x W + b with x as rows.
struct Linear {
    Var W, b;

    Linear() = default;
    Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng,
           bool zero_init = false);
    Var forward(const Var& x) const;
    int out_dim() const { return W.value().cols(); }
};

/// Stack of Linear layers with a smooth activation between them (none after
/// the last unless `activate_output`).
struct Mlp {
    std::vector<Linear> layers;
    bool activate_output = false;

    Mlp() = default;
    Mlp(ParamStore& ps, const std::string& prefix, const std::vector<int>& dims, Rng& rng,
        bool activate_output = false);
    Var forward(Var x) const;
    int out_dim() const { return layers.back().out_dim(); }
};

struct Conv3dLayer {
    Var W, b;
    int stride = 1, pad = 0;

    Conv3dLayer() = default;
    Conv3dLayer(ParamStore& ps, const std::string& prefix, int cin, int cout, int k, int stride,
                int pad, Rng& rng);
    Var forward(const Var& x) const { return ad::conv3d(x, W, b, stride, pad); }
};

struct ConvTranspose3dLayer {
    Var W, b;
    int stride = 1, pad = 0;

    ConvTranspose3dLayer() = default;
    ConvTranspose3dLayer(ParamStore& ps, const std::string& prefix, int cin, int cout, int k,
                         int stride, int pad, Rng& rng);
    Var forward(const Var& x) const { return ad::conv_transpose3d(x, W, b, stride, pad); }
};

/// AdamW with optional global-norm gradient clipping. State is keyed by
/// parameter name and serializes with checkpoints.
class AdamW {
public:
    struct Config {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
        double clip_norm = 1.0;  // <= 0 disables clipping
    };

    AdamW();
    explicit AdamW(const Config& cfg);

    /// One update over every parameter in the store; clears gradients.
    /// Returns the pre-clip global gradient norm.
    double step(ParamStore& ps);

    Config& config() { return cfg_; }
    const Config& config() const { return cfg_; }
    int64_t t() const { return t_; }

    struct State {
        Tensor m, v;
    };
    std::map<std::string, State>& states() { return states_; }
    void set_t(int64_t t) { t_ = t; }

private:
    Config cfg_;
    int64_t t_ = 0;
    std::map<std::string, State> states_;
};

inline AdamW::AdamW() : cfg_() {}
inline AdamW::AdamW(const Config& cfg) : cfg_(cfg) {}

}  // namespace scenegen::nn

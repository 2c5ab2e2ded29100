// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "scenegen/core/tensor.hpp"

namespace scenegen::ad {

class Var;

/// One node of the dynamically built computation graph. The graph is rebuilt
/// on every forward pass and freed when the last Var handle goes away; leaf
/// parameters outlive the graph because callers keep their Vars.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation, same shape as value
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents

    Tensor& ensure_grad();
    void clear_grad();
};

/// Value-semantics handle to a graph node.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

    const Tensor& value() const { return n_->value; }
    Tensor& value() { return n_->value; }
    const Tensor& grad() const { return n_->grad; }
    Tensor& grad() { return n_->grad; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    bool defined() const { return static_cast<bool>(n_); }
    Node* node() const { return n_.get(); }
    std::shared_ptr<Node> ptr() const { return n_; }

    const std::vector<int>& shape() const { return n_->value.shape(); }
    int64_t size() const { return n_->value.size(); }

private:
    std::shared_ptr<Node> n_;
};

Var constant(Tensor t);
Var leaf(Tensor t, bool requires_grad = true);

// ---- arithmetic ----
Var add(const Var& a, const Var& b);             // same shape
Var sub(const Var& a, const Var& b);             // same shape
Var mul(const Var& a, const Var& b);             // elementwise, same shape
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var neg(const Var& a);

// ---- shape ----
Var reshape(const Var& a, std::vector<int> shape);
Var concat_cols(const std::vector<Var>& xs);                       // [n, sum d]
Var concat_rows(const std::vector<Var>& xs);                       // [sum n, d]
Var slice_cols(const Var& x, int start, int len);                  // [n, len]
Var gather_rows(const Var& x, std::vector<int> idx);               // [|idx|, d]
Var scatter_add_rows(const Var& x, std::vector<int> idx, int out_rows);
Var row_scale(const Var& x, std::vector<double> s);                // row i *= s[i]
Var permute_ncs_to_nsc(const Var& x);  // [N,C,S] -> [N,S,C]
Var permute_nsc_to_ncs(const Var& x);  // [N,S,C] -> [N,C,S]

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);     // [n,k] x [k,m]
Var add_bias(const Var& x, const Var& b);   // [n,d] + [d]
Var bmm(const Var& a, const Var& b);        // [N,r,k] x [N,k,c]
Var bmm_nt(const Var& a, const Var& b);     // [N,r,k] x [N,c,k]^T -> [N,r,c]

// ---- elementwise nonlinear ----
Var tanh_(const Var& a);
Var silu(const Var& a);
Var softplus(const Var& a);
Var sigmoid(const Var& a);
Var exp_(const Var& a);
Var log_(const Var& a);
Var square(const Var& a);
Var sqrt_(const Var& a);
Var abs_(const Var& a);

// ---- reductions & losses ----
Var sum(const Var& a);        // scalar [1]
Var mean(const Var& a);       // scalar [1]
Var rows_sum(const Var& a);   // [n,d] -> [n]
Var mse_loss(const Var& a, const Var& b);  // mean over all elements
Var cross_entropy_mean(const Var& logits, const std::vector<int>& labels);
Var softmax_rows(const Var& x);  // softmax over last dim of rank-2/3 input
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// ---- gradient control ----
Var detach(const Var& a);

// ---- convolution (cubic kernels, zero padding) ----
// x [N,Cin,D,H,W], w [Cout,Cin,k,k,k], b [Cout] (pass undefined Var for none)
Var conv3d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x [N,Cin,D,H,W], w [Cin,Cout,k,k,k]; out spatial = (in-1)*stride - 2*pad + k
Var conv_transpose3d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x [N,C,spatial...], b [N,C]: adds b[n,c] to every spatial location
Var add_channel_bias(const Var& x, const Var& b);

/// Reverse-mode sweep from a scalar loss. Accumulates into .grad of every
/// reachable node with requires_grad; leaves keep their grads until cleared.
void backward(const Var& loss);

}  // namespace scenegen::ad

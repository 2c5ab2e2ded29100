// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenegen/core/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "scenegen/core/error.hpp"

namespace scenegen::ad {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Tensor& Node::ensure_grad() {
    if (!grad_ready) {
        grad = Tensor(value.shape());
        grad_ready = true;
    }
    return grad;
}

void Node::clear_grad() {
    grad = Tensor();
    grad_ready = false;
}

namespace {

std::shared_ptr<Node> make_node(Tensor value, std::vector<Var> parents) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const Var& p : n->parents) {
        if (p.requires_grad()) {
            n->requires_grad = true;
            break;
        }
    }
    return n;
}

void accumulate(Node& dst, const Tensor& g) {
    Tensor& acc = dst.ensure_grad();
    const double* s = g.data();
    double* d = acc.data();
    for (int64_t i = 0; i < g.size(); ++i) d[i] += s[i];
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " +
                         b.value().shape_str());
}

Var unary(const Var& a, Tensor value, std::function<void(Node&)> bp) {
    auto n = make_node(std::move(value), {a});
    if (n->requires_grad) n->backprop = std::move(bp);
    return Var(n);
}

// Elementwise map with derivative available in backward via stored dval.
Var elementwise(const Var& a, double (*f)(double), double (*df)(double)) {
    Tensor v(a.shape());
    const Tensor& x = a.value();
    for (int64_t i = 0; i < x.size(); ++i) v[i] = f(x[i]);
    return unary(a, std::move(v), [df](Node& n) {
        Node* p = n.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& pg = p->ensure_grad();
        const Tensor& x = p->value;
        for (int64_t i = 0; i < x.size(); ++i) pg[i] += n.grad[i] * df(x[i]);
    });
}

}  // namespace

Var constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = false;
    return Var(n);
}

Var leaf(Tensor t, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = requires_grad;
    return Var(n);
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor v(a.shape());
    for (int64_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
    auto n = make_node(std::move(v), {a, b});
    if (n->requires_grad)
        n->backprop = [](Node& n) {
            for (int k = 0; k < 2; ++k)
                if (n.parents[k].requires_grad()) accumulate(*n.parents[k].node(), n.grad);
        };
    return Var(n);
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor v(a.shape());
    for (int64_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] - b.value()[i];
    auto n = make_node(std::move(v), {a, b});
    if (n->requires_grad)
        n->backprop = [](Node& n) {
            if (n.parents[0].requires_grad()) accumulate(*n.parents[0].node(), n.grad);
            if (n.parents[1].requires_grad()) {
                Tensor& g = n.parents[1].node()->ensure_grad();
                for (int64_t i = 0; i < n.grad.size(); ++i) g[i] -= n.grad[i];
            }
        };
    return Var(n);
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor v(a.shape());
    for (int64_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
    auto n = make_node(std::move(v), {a, b});
    if (n->requires_grad)
        n->backprop = [](Node& n) {
            const Tensor& av = n.parents[0].value();
            const Tensor& bv = n.parents[1].value();
            if (n.parents[0].requires_grad()) {
                Tensor& g = n.parents[0].node()->ensure_grad();
                for (int64_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * bv[i];
            }
            if (n.parents[1].requires_grad()) {
                Tensor& g = n.parents[1].node()->ensure_grad();
                for (int64_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * av[i];
            }
        };
    return Var(n);
}

Var scale(const Var& a, double c) {
    Tensor v(a.shape());
    for (int64_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * c;
    return unary(a, std::move(v), [c](Node& n) {
        Node* p = n.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (int64_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * c;
    });
}

Var add_scalar(const Var& a, double c) {
    Tensor v(a.shape());
    for (int64_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + c;
    return unary(a, std::move(v), [](Node& n) {
        Node* p = n.parents[0].node();
        if (p->requires_grad) accumulate(*p, n.grad);
    });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var reshape(const Var& a, std::vector<int> shape) {
    if (Tensor::numel(shape) != a.size())
        throw ShapeError("reshape: element count mismatch " + a.value().shape_str());
    Tensor v(std::move(shape), a.value().raw());
    return unary(a, std::move(v), [](Node& n) {
        Node* p = n.parents[0].node();
        if (p->requires_grad) {
            Tensor g(p->value.shape(), n.grad.raw());
            accumulate(*p, g);
        }
    });
}

Var concat_cols(const std::vector<Var>& xs) {
    int n = xs[0].value().rows();
    int total = 0;
    for (const Var& x : xs) {
        if (x.value().rank() != 2 || x.value().rows() != n)
            throw ShapeError("concat_cols: inputs must be [n,*] with equal n");
        total += x.value().cols();
    }
    Tensor v({n, total});
    int off = 0;
    for (const Var& x : xs) {
        int c = x.value().cols();
        for (int r = 0; r < n; ++r)
            std::copy_n(x.value().data() + static_cast<int64_t>(r) * c, c,
                        v.data() + static_cast<int64_t>(r) * total + off);
        off += c;
    }
    auto node = make_node(std::move(v), xs);
    if (node->requires_grad)
        node->backprop = [](Node& nd) {
            int total = nd.value.cols();
            int rows = nd.value.rows();
            int off = 0;
            for (Var& p : nd.parents) {
                int c = p.value().cols();
                if (p.requires_grad()) {
                    Tensor& g = p.node()->ensure_grad();
                    for (int r = 0; r < rows; ++r)
                        for (int j = 0; j < c; ++j)
                            g[static_cast<int64_t>(r) * c + j] +=
                                nd.grad[static_cast<int64_t>(r) * total + off + j];
                }
                off += c;
            }
        };
    return Var(node);
}

Var concat_rows(const std::vector<Var>& xs) {
    int d = xs[0].value().cols();
    int total = 0;
    for (const Var& x : xs) {
        if (x.value().rank() != 2 || x.value().cols() != d)
            throw ShapeError("concat_rows: inputs must be [*,d] with equal d");
        total += x.value().rows();
    }
    Tensor v({total, d});
    int off = 0;
    for (const Var& x : xs) {
        std::copy_n(x.value().data(), x.value().size(), v.data() + static_cast<int64_t>(off) * d);
        off += x.value().rows();
    }
    auto node = make_node(std::move(v), xs);
    if (node->requires_grad)
        node->backprop = [](Node& nd) {
            int d = nd.value.cols();
            int off = 0;
            for (Var& p : nd.parents) {
                int r = p.value().rows();
                if (p.requires_grad()) {
                    Tensor& g = p.node()->ensure_grad();
                    const double* src = nd.grad.data() + static_cast<int64_t>(off) * d;
                    for (int64_t i = 0; i < static_cast<int64_t>(r) * d; ++i) g[i] += src[i];
                }
                off += r;
            }
        };
    return Var(node);
}

Var slice_cols(const Var& x, int start, int len) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || start < 0 || start + len > xv.cols())
        throw ShapeError("slice_cols: bad range");
    int n = xv.rows();
    Tensor v({n, len});
    for (int r = 0; r < n; ++r)
        std::copy_n(xv.data() + static_cast<int64_t>(r) * xv.cols() + start, len,
                    v.data() + static_cast<int64_t>(r) * len);
    return unary(x, std::move(v), [start, len](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        int cols = p->value.cols();
        int n = nd.value.rows();
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < len; ++j)
                g[static_cast<int64_t>(r) * cols + start + j] +=
                    nd.grad[static_cast<int64_t>(r) * len + j];
    });
}

Var gather_rows(const Var& x, std::vector<int> idx) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("gather_rows: need rank-2 input");
    int d = xv.cols();
    Tensor v({static_cast<int>(idx.size()), d});
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= xv.rows()) throw ShapeError("gather_rows: index out of range");
        std::copy_n(xv.data() + static_cast<int64_t>(idx[i]) * d, d, v.data() + i * d);
    }
    return unary(x, std::move(v), [idx = std::move(idx), d](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < d; ++j)
                g[static_cast<int64_t>(idx[i]) * d + j] += nd.grad[i * d + j];
    });
}

Var scatter_add_rows(const Var& x, std::vector<int> idx, int out_rows) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || static_cast<size_t>(xv.rows()) != idx.size())
        throw ShapeError("scatter_add_rows: rows must match index count");
    int d = xv.cols();
    Tensor v({out_rows, d});
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= out_rows) throw ShapeError("scatter_add_rows: index out of range");
        for (int j = 0; j < d; ++j) v[static_cast<int64_t>(idx[i]) * d + j] += xv[i * d + j];
    }
    return unary(x, std::move(v), [idx = std::move(idx), d](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < d; ++j)
                g[i * d + j] += nd.grad[static_cast<int64_t>(idx[i]) * d + j];
    });
}

Var row_scale(const Var& x, std::vector<double> s) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || static_cast<size_t>(xv.rows()) != s.size())
        throw ShapeError("row_scale: scale count must equal rows");
    int d = xv.cols();
    Tensor v(xv.shape());
    for (int r = 0; r < xv.rows(); ++r)
        for (int j = 0; j < d; ++j) v[static_cast<int64_t>(r) * d + j] = xv[static_cast<int64_t>(r) * d + j] * s[r];
    return unary(x, std::move(v), [s = std::move(s), d](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (size_t r = 0; r < s.size(); ++r)
            for (int j = 0; j < d; ++j)
                g[static_cast<int64_t>(r) * d + j] += nd.grad[static_cast<int64_t>(r) * d + j] * s[r];
    });
}

Var permute_ncs_to_nsc(const Var& x) {
    const Tensor& xv = x.value();
    if (xv.rank() != 3) throw ShapeError("permute_ncs_to_nsc: need rank-3");
    int N = xv.dim(0), C = xv.dim(1), S = xv.dim(2);
    Tensor v({N, S, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int s = 0; s < S; ++s)
                v[(static_cast<int64_t>(n) * S + s) * C + c] =
                    xv[(static_cast<int64_t>(n) * C + c) * S + s];
    return unary(x, std::move(v), [N, C, S](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int s = 0; s < S; ++s)
                    g[(static_cast<int64_t>(n) * C + c) * S + s] +=
                        nd.grad[(static_cast<int64_t>(n) * S + s) * C + c];
    });
}

Var permute_nsc_to_ncs(const Var& x) {
    const Tensor& xv = x.value();
    if (xv.rank() != 3) throw ShapeError("permute_nsc_to_ncs: need rank-3");
    int N = xv.dim(0), S = xv.dim(1), C = xv.dim(2);
    Tensor v({N, C, S});
    for (int n = 0; n < N; ++n)
        for (int s = 0; s < S; ++s)
            for (int c = 0; c < C; ++c)
                v[(static_cast<int64_t>(n) * C + c) * S + s] =
                    xv[(static_cast<int64_t>(n) * S + s) * C + c];
    return unary(x, std::move(v), [N, C, S](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < S; ++s)
                for (int c = 0; c < C; ++c)
                    g[(static_cast<int64_t>(n) * S + s) * C + c] +=
                        nd.grad[(static_cast<int64_t>(n) * C + c) * S + s];
    });
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
        throw ShapeError("matmul: incompatible " + av.shape_str() + " x " + bv.shape_str());
    int n = av.rows(), k = av.cols(), m = bv.cols();
    Tensor v({n, m});
    {
        ConstMatMap A(av.data(), n, k), B(bv.data(), k, m);
        MatMap C(v.data(), n, m);
        C.noalias() = A * B;
    }
    auto node = make_node(std::move(v), {a, b});
    if (node->requires_grad)
        node->backprop = [n, k, m](Node& nd) {
            ConstMatMap G(nd.grad.data(), n, m);
            if (nd.parents[0].requires_grad()) {
                Node* p = nd.parents[0].node();
                ConstMatMap B(nd.parents[1].value().data(), k, m);
                MatMap PG(p->ensure_grad().data(), n, k);
                PG.noalias() += G * B.transpose();
            }
            if (nd.parents[1].requires_grad()) {
                Node* p = nd.parents[1].node();
                ConstMatMap A(nd.parents[0].value().data(), n, k);
                MatMap PG(p->ensure_grad().data(), k, m);
                PG.noalias() += A.transpose() * G;
            }
        };
    return Var(node);
}

Var add_bias(const Var& x, const Var& b) {
    const Tensor& xv = x.value();
    const Tensor& bv = b.value();
    if (xv.rank() != 2 || bv.size() != xv.cols()) throw ShapeError("add_bias: bias dim mismatch");
    int n = xv.rows(), d = xv.cols();
    Tensor v(xv.shape());
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j)
            v[static_cast<int64_t>(r) * d + j] = xv[static_cast<int64_t>(r) * d + j] + bv[j];
    auto node = make_node(std::move(v), {x, b});
    if (node->requires_grad)
        node->backprop = [n, d](Node& nd) {
            if (nd.parents[0].requires_grad()) accumulate(*nd.parents[0].node(), nd.grad);
            if (nd.parents[1].requires_grad()) {
                Tensor& g = nd.parents[1].node()->ensure_grad();
                for (int r = 0; r < n; ++r)
                    for (int j = 0; j < d; ++j) g[j] += nd.grad[static_cast<int64_t>(r) * d + j];
            }
        };
    return Var(node);
}

namespace {

Var bmm_impl(const Var& a, const Var& b, bool transpose_b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0))
        throw ShapeError("bmm: need matching rank-3 batches");
    int N = av.dim(0), r = av.dim(1), k = av.dim(2);
    int c = transpose_b ? bv.dim(1) : bv.dim(2);
    if ((transpose_b ? bv.dim(2) : bv.dim(1)) != k) throw ShapeError("bmm: inner dim mismatch");
    Tensor v({N, r, c});
    for (int i = 0; i < N; ++i) {
        ConstMatMap A(av.data() + static_cast<int64_t>(i) * r * k, r, k);
        MatMap C(v.data() + static_cast<int64_t>(i) * r * c, r, c);
        if (transpose_b) {
            ConstMatMap B(bv.data() + static_cast<int64_t>(i) * c * k, c, k);
            C.noalias() = A * B.transpose();
        } else {
            ConstMatMap B(bv.data() + static_cast<int64_t>(i) * k * c, k, c);
            C.noalias() = A * B;
        }
    }
    auto node = make_node(std::move(v), {a, b});
    if (node->requires_grad)
        node->backprop = [N, r, k, c, transpose_b](Node& nd) {
            for (int i = 0; i < N; ++i) {
                ConstMatMap G(nd.grad.data() + static_cast<int64_t>(i) * r * c, r, c);
                const Tensor& avt = nd.parents[0].value();
                const Tensor& bvt = nd.parents[1].value();
                if (nd.parents[0].requires_grad()) {
                    MatMap AG(nd.parents[0].node()->ensure_grad().data() +
                                  static_cast<int64_t>(i) * r * k,
                              r, k);
                    if (transpose_b) {
                        ConstMatMap B(bvt.data() + static_cast<int64_t>(i) * c * k, c, k);
                        AG.noalias() += G * B;
                    } else {
                        ConstMatMap B(bvt.data() + static_cast<int64_t>(i) * k * c, k, c);
                        AG.noalias() += G * B.transpose();
                    }
                }
                if (nd.parents[1].requires_grad()) {
                    ConstMatMap A(avt.data() + static_cast<int64_t>(i) * r * k, r, k);
                    if (transpose_b) {
                        MatMap BG(nd.parents[1].node()->ensure_grad().data() +
                                      static_cast<int64_t>(i) * c * k,
                                  c, k);
                        BG.noalias() += G.transpose() * A;
                    } else {
                        MatMap BG(nd.parents[1].node()->ensure_grad().data() +
                                      static_cast<int64_t>(i) * k * c,
                                  k, c);
                        BG.noalias() += A.transpose() * G;
                    }
                }
            }
        };
    return Var(node);
}

}  // namespace

Var bmm(const Var& a, const Var& b) { return bmm_impl(a, b, false); }
Var bmm_nt(const Var& a, const Var& b) { return bmm_impl(a, b, true); }

Var tanh_(const Var& a) {
    return elementwise(
        a, [](double x) { return std::tanh(x); },
        [](double x) {
            double t = std::tanh(x);
            return 1.0 - t * t;
        });
}

namespace {
double sigmoid_scalar(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
double softplus_scalar(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}
}  // namespace

Var silu(const Var& a) {
    return elementwise(
        a, [](double x) { return x * sigmoid_scalar(x); },
        [](double x) {
            double s = sigmoid_scalar(x);
            return s * (1.0 + x * (1.0 - s));
        });
}

Var softplus(const Var& a) {
    return elementwise(a, softplus_scalar, sigmoid_scalar);
}

Var sigmoid(const Var& a) {
    return elementwise(a, sigmoid_scalar, [](double x) {
        double s = sigmoid_scalar(x);
        return s * (1.0 - s);
    });
}

Var exp_(const Var& a) {
    return elementwise(
        a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log_(const Var& a) {
    return elementwise(
        a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var square(const Var& a) {
    return elementwise(
        a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var sqrt_(const Var& a) {
    return elementwise(
        a, [](double x) { return std::sqrt(x); },
        [](double x) { return 0.5 / std::sqrt(x); });
}

Var abs_(const Var& a) {
    return elementwise(
        a, [](double x) { return std::fabs(x); },
        [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var sum(const Var& a) {
    double s = 0;
    for (int64_t i = 0; i < a.size(); ++i) s += a.value()[i];
    return unary(a, Tensor::scalar(s), [](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        double gv = nd.grad[0];
        for (int64_t i = 0; i < g.size(); ++i) g[i] += gv;
    });
}

Var mean(const Var& a) {
    int64_t n = a.size();
    double s = 0;
    for (int64_t i = 0; i < n; ++i) s += a.value()[i];
    return unary(a, Tensor::scalar(s / static_cast<double>(n)), [n](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        double gv = nd.grad[0] / static_cast<double>(n);
        for (int64_t i = 0; i < g.size(); ++i) g[i] += gv;
    });
}

Var rows_sum(const Var& a) {
    const Tensor& av = a.value();
    if (av.rank() != 2) throw ShapeError("rows_sum: need rank-2");
    int n = av.rows(), d = av.cols();
    Tensor v({n});
    for (int r = 0; r < n; ++r) {
        double s = 0;
        for (int j = 0; j < d; ++j) s += av[static_cast<int64_t>(r) * d + j];
        v[r] = s;
    }
    return unary(a, std::move(v), [n, d](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < d; ++j) g[static_cast<int64_t>(r) * d + j] += nd.grad[r];
    });
}

Var mse_loss(const Var& a, const Var& b) {
    check_same_shape(a, b, "mse_loss");
    int64_t n = a.size();
    double s = 0;
    for (int64_t i = 0; i < n; ++i) {
        double dlt = a.value()[i] - b.value()[i];
        s += dlt * dlt;
    }
    auto node = make_node(Tensor::scalar(s / static_cast<double>(n)), {a, b});
    if (node->requires_grad)
        node->backprop = [n](Node& nd) {
            const Tensor& av = nd.parents[0].value();
            const Tensor& bv = nd.parents[1].value();
            double c = 2.0 * nd.grad[0] / static_cast<double>(n);
            if (nd.parents[0].requires_grad()) {
                Tensor& g = nd.parents[0].node()->ensure_grad();
                for (int64_t i = 0; i < n; ++i) g[i] += c * (av[i] - bv[i]);
            }
            if (nd.parents[1].requires_grad()) {
                Tensor& g = nd.parents[1].node()->ensure_grad();
                for (int64_t i = 0; i < n; ++i) g[i] -= c * (av[i] - bv[i]);
            }
        };
    return Var(node);
}

Var cross_entropy_mean(const Var& logits, const std::vector<int>& labels) {
    const Tensor& lv = logits.value();
    if (lv.rank() != 2 || static_cast<size_t>(lv.rows()) != labels.size())
        throw ShapeError("cross_entropy_mean: label count must equal rows");
    int n = lv.rows(), K = lv.cols();
    double total = 0;
    for (int r = 0; r < n; ++r) {
        const double* row = lv.data() + static_cast<int64_t>(r) * K;
        double mx = row[0];
        for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double lse = 0;
        for (int j = 0; j < K; ++j) lse += std::exp(row[j] - mx);
        lse = mx + std::log(lse);
        if (labels[r] < 0 || labels[r] >= K) throw ShapeError("cross_entropy_mean: label out of range");
        total += lse - row[labels[r]];
    }
    return unary(logits, Tensor::scalar(total / n), [labels, n, K](Node& nd) {
        Node* p = nd.parents[0].node();
        if (!p->requires_grad) return;
        Tensor& g = p->ensure_grad();
        const Tensor& lv = p->value;
        double c = nd.grad[0] / n;
        for (int r = 0; r < n; ++r) {
            const double* row = lv.data() + static_cast<int64_t>(r) * K;
            double mx = row[0];
            for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
            double z = 0;
            for (int j = 0; j < K; ++j) z += std::exp(row[j] - mx);
            for (int j = 0; j < K; ++j) {
                double soft = std::exp(row[j] - mx) / z;
                g[static_cast<int64_t>(r) * K + j] += c * (soft - (j == labels[r] ? 1.0 : 0.0));
            }
        }
    });
}

Var softmax_rows(const Var& x) {
    const Tensor& xv = x.value();
    if (xv.rank() < 2) throw ShapeError("softmax_rows: need rank >= 2");
    int c = xv.dim(xv.rank() - 1);
    int64_t rows = xv.size() / c;
    Tensor v(xv.shape());
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * c;
        double* out = v.data() + r * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0;
        for (int j = 0; j < c; ++j) {
            out[j] = std::exp(row[j] - mx);
            z += out[j];
        }
        for (int j = 0; j < c; ++j) out[j] /= z;
    }
    auto node = make_node(std::move(v), {x});
    if (node->requires_grad)
        node->backprop = [c, rows](Node& nd) {
            Node* p = nd.parents[0].node();
            if (!p->requires_grad) return;
            Tensor& g = p->ensure_grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double* y = nd.value.data() + r * c;
                const double* dy = nd.grad.data() + r * c;
                double dot = 0;
                for (int j = 0; j < c; ++j) dot += dy[j] * y[j];
                for (int j = 0; j < c; ++j) g[r * c + j] += y[j] * (dy[j] - dot);
            }
        };
    return Var(node);
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("layer_norm_rows: need rank-2");
    int n = xv.rows(), d = xv.cols();
    if (gamma.size() != d || beta.size() != d) throw ShapeError("layer_norm_rows: param dim mismatch");
    Tensor v(xv.shape());
    std::vector<double> inv(n), mu(n);
    for (int r = 0; r < n; ++r) {
        const double* row = xv.data() + static_cast<int64_t>(r) * d;
        double m = 0;
        for (int j = 0; j < d; ++j) m += row[j];
        m /= d;
        double var = 0;
        for (int j = 0; j < d; ++j) var += (row[j] - m) * (row[j] - m);
        var /= d;
        mu[r] = m;
        inv[r] = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < d; ++j)
            v[static_cast<int64_t>(r) * d + j] = (row[j] - m) * inv[r] * gamma.value()[j] + beta.value()[j];
    }
    auto node = make_node(std::move(v), {x, gamma, beta});
    if (node->requires_grad)
        node->backprop = [n, d, mu = std::move(mu), inv = std::move(inv)](Node& nd) {
            const Tensor& xv = nd.parents[0].value();
            const Tensor& gv = nd.parents[1].value();
            for (int r = 0; r < n; ++r) {
                const double* row = xv.data() + static_cast<int64_t>(r) * d;
                const double* dy = nd.grad.data() + static_cast<int64_t>(r) * d;
                // xhat and reductions
                double mean_dxhat = 0, mean_dxhat_xhat = 0;
                std::vector<double> xhat(d), dxhat(d);
                for (int j = 0; j < d; ++j) {
                    xhat[j] = (row[j] - mu[r]) * inv[r];
                    dxhat[j] = dy[j] * gv[j];
                    mean_dxhat += dxhat[j];
                    mean_dxhat_xhat += dxhat[j] * xhat[j];
                }
                mean_dxhat /= d;
                mean_dxhat_xhat /= d;
                if (nd.parents[0].requires_grad()) {
                    Tensor& g = nd.parents[0].node()->ensure_grad();
                    for (int j = 0; j < d; ++j)
                        g[static_cast<int64_t>(r) * d + j] +=
                            inv[r] * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                }
                if (nd.parents[1].requires_grad()) {
                    Tensor& g = nd.parents[1].node()->ensure_grad();
                    for (int j = 0; j < d; ++j) g[j] += dy[j] * xhat[j];
                }
                if (nd.parents[2].requires_grad()) {
                    Tensor& g = nd.parents[2].node()->ensure_grad();
                    for (int j = 0; j < d; ++j) g[j] += dy[j];
                }
            }
        };
    return Var(node);
}

Var detach(const Var& a) {
    auto n = std::make_shared<Node>();
    n->value = a.value();
    n->requires_grad = false;
    return Var(n);
}

// ---------------------------------------------------------------------------
// 3-D convolution via im2col + GEMM.
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
    int N, Cin, D, H, W;
    int k, stride, pad;
    int Do, Ho, Wo;
    int64_t spatial_in() const { return static_cast<int64_t>(D) * H * W; }
    int64_t spatial_out() const { return static_cast<int64_t>(Do) * Ho * Wo; }
};

ConvDims conv_dims(const Tensor& x, int k, int stride, int pad) {
    ConvDims d;
    d.N = x.dim(0);
    d.Cin = x.dim(1);
    d.D = x.dim(2);
    d.H = x.dim(3);
    d.W = x.dim(4);
    d.k = k;
    d.stride = stride;
    d.pad = pad;
    d.Do = (d.D + 2 * pad - k) / stride + 1;
    d.Ho = (d.H + 2 * pad - k) / stride + 1;
    d.Wo = (d.W + 2 * pad - k) / stride + 1;
    if (d.Do < 1 || d.Ho < 1 || d.Wo < 1) throw ShapeError("conv3d: output would be empty");
    return d;
}

// col: [Cin*k^3, Do*Ho*Wo]
void im2col(const double* x, const ConvDims& c, double* col) {
    int64_t out_s = c.spatial_out();
    for (int ci = 0; ci < c.Cin; ++ci) {
        for (int kd = 0; kd < c.k; ++kd)
            for (int kh = 0; kh < c.k; ++kh)
                for (int kw = 0; kw < c.k; ++kw) {
                    int64_t row = ((static_cast<int64_t>(ci) * c.k + kd) * c.k + kh) * c.k + kw;
                    double* dst = col + row * out_s;
                    int64_t o = 0;
                    for (int od = 0; od < c.Do; ++od) {
                        int id = od * c.stride + kd - c.pad;
                        for (int oh = 0; oh < c.Ho; ++oh) {
                            int ih = oh * c.stride + kh - c.pad;
                            for (int ow = 0; ow < c.Wo; ++ow, ++o) {
                                int iw = ow * c.stride + kw - c.pad;
                                bool in = id >= 0 && id < c.D && ih >= 0 && ih < c.H && iw >= 0 && iw < c.W;
                                dst[o] = in ? x[(static_cast<int64_t>(ci) * c.D + id) * c.H * c.W +
                                               static_cast<int64_t>(ih) * c.W + iw]
                                            : 0.0;
                            }
                        }
                    }
                }
    }
}

// Adjoint of im2col: accumulate col rows back into the image.
void col2im_add(const double* col, const ConvDims& c, double* x) {
    int64_t out_s = c.spatial_out();
    for (int ci = 0; ci < c.Cin; ++ci) {
        for (int kd = 0; kd < c.k; ++kd)
            for (int kh = 0; kh < c.k; ++kh)
                for (int kw = 0; kw < c.k; ++kw) {
                    int64_t row = ((static_cast<int64_t>(ci) * c.k + kd) * c.k + kh) * c.k + kw;
                    const double* src = col + row * out_s;
                    int64_t o = 0;
                    for (int od = 0; od < c.Do; ++od) {
                        int id = od * c.stride + kd - c.pad;
                        for (int oh = 0; oh < c.Ho; ++oh) {
                            int ih = oh * c.stride + kh - c.pad;
                            for (int ow = 0; ow < c.Wo; ++ow, ++o) {
                                int iw = ow * c.stride + kw - c.pad;
                                if (id >= 0 && id < c.D && ih >= 0 && ih < c.H && iw >= 0 && iw < c.W)
                                    x[(static_cast<int64_t>(ci) * c.D + id) * c.H * c.W +
                                      static_cast<int64_t>(ih) * c.W + iw] += src[o];
                            }
                        }
                    }
                }
    }
}

}  // namespace

Var conv3d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (xv.rank() != 5 || wv.rank() != 5) throw ShapeError("conv3d: need [N,C,D,H,W] and [Co,Ci,k,k,k]");
    if (wv.dim(1) != xv.dim(1)) throw ShapeError("conv3d: channel mismatch");
    int k = wv.dim(2);
    ConvDims cd = conv_dims(xv, k, stride, pad);
    int Cout = wv.dim(0);
    int64_t krows = static_cast<int64_t>(cd.Cin) * k * k * k;
    int64_t out_s = cd.spatial_out();

    Tensor v({cd.N, Cout, cd.Do, cd.Ho, cd.Wo});
    std::vector<double> col(krows * out_s);
    ConstMatMap Wm(wv.data(), Cout, krows);
    for (int n = 0; n < cd.N; ++n) {
        im2col(xv.data() + static_cast<int64_t>(n) * cd.Cin * cd.spatial_in(), cd, col.data());
        ConstMatMap C(col.data(), krows, out_s);
        MatMap Y(v.data() + static_cast<int64_t>(n) * Cout * out_s, Cout, out_s);
        Y.noalias() = Wm * C;
        if (b.defined()) {
            const Tensor& bv = b.value();
            for (int co = 0; co < Cout; ++co) {
                double* row = v.data() + (static_cast<int64_t>(n) * Cout + co) * out_s;
                for (int64_t i = 0; i < out_s; ++i) row[i] += bv[co];
            }
        }
    }
    std::vector<Var> parents = b.defined() ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    auto node = make_node(std::move(v), std::move(parents));
    if (node->requires_grad)
        node->backprop = [cd, Cout, krows, out_s](Node& nd) {
            const Tensor& xv = nd.parents[0].value();
            const Tensor& wv = nd.parents[1].value();
            bool has_bias = nd.parents.size() == 3;
            std::vector<double> col(krows * out_s);
            ConstMatMap Wm(wv.data(), Cout, krows);
            for (int n = 0; n < cd.N; ++n) {
                ConstMatMap G(nd.grad.data() + static_cast<int64_t>(n) * Cout * out_s, Cout, out_s);
                if (nd.parents[1].requires_grad()) {
                    im2col(xv.data() + static_cast<int64_t>(n) * cd.Cin * cd.spatial_in(), cd,
                           col.data());
                    ConstMatMap C(col.data(), krows, out_s);
                    MatMap WG(nd.parents[1].node()->ensure_grad().data(), Cout, krows);
                    WG.noalias() += G * C.transpose();
                }
                if (nd.parents[0].requires_grad()) {
                    MatMap DC(col.data(), krows, out_s);
                    DC.noalias() = Wm.transpose() * G;
                    col2im_add(col.data(), cd,
                               nd.parents[0].node()->ensure_grad().data() +
                                   static_cast<int64_t>(n) * cd.Cin * cd.spatial_in());
                }
                if (has_bias && nd.parents[2].requires_grad()) {
                    Tensor& bg = nd.parents[2].node()->ensure_grad();
                    for (int co = 0; co < Cout; ++co) {
                        const double* row = nd.grad.data() + (static_cast<int64_t>(n) * Cout + co) * out_s;
                        double s = 0;
                        for (int64_t i = 0; i < out_s; ++i) s += row[i];
                        bg[co] += s;
                    }
                }
            }
        };
    return Var(node);
}

Var conv_transpose3d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (xv.rank() != 5 || wv.rank() != 5)
        throw ShapeError("conv_transpose3d: need [N,C,D,H,W] and [Ci,Co,k,k,k]");
    if (wv.dim(0) != xv.dim(1)) throw ShapeError("conv_transpose3d: channel mismatch");
    int Cin = xv.dim(1), Cout = wv.dim(1), k = wv.dim(2);
    int N = xv.dim(0), Di = xv.dim(2), Hi = xv.dim(3), Wi = xv.dim(4);
    int Do = (Di - 1) * stride - 2 * pad + k;
    int Ho = (Hi - 1) * stride - 2 * pad + k;
    int Wo = (Wi - 1) * stride - 2 * pad + k;
    if (Do < 1 || Ho < 1 || Wo < 1) throw ShapeError("conv_transpose3d: output would be empty");

    // The adjoint view: this layer is the transpose of conv3d(out -> in) whose
    // im2col geometry is given by `adj` below.
    ConvDims adj;
    adj.N = N;
    adj.Cin = Cout;
    adj.D = Do;
    adj.H = Ho;
    adj.W = Wo;
    adj.k = k;
    adj.stride = stride;
    adj.pad = pad;
    adj.Do = Di;
    adj.Ho = Hi;
    adj.Wo = Wi;

    int64_t krows = static_cast<int64_t>(Cout) * k * k * k;
    int64_t s_in = static_cast<int64_t>(Di) * Hi * Wi;
    int64_t s_out = static_cast<int64_t>(Do) * Ho * Wo;

    Tensor v({N, Cout, Do, Ho, Wo});
    std::vector<double> col(krows * s_in);
    ConstMatMap Wm(wv.data(), Cin, krows);
    for (int n = 0; n < N; ++n) {
        ConstMatMap X(xv.data() + static_cast<int64_t>(n) * Cin * s_in, Cin, s_in);
        MatMap G(col.data(), krows, s_in);
        G.noalias() = Wm.transpose() * X;
        col2im_add(col.data(), adj, v.data() + static_cast<int64_t>(n) * Cout * s_out);
        if (b.defined()) {
            const Tensor& bv = b.value();
            for (int co = 0; co < Cout; ++co) {
                double* row = v.data() + (static_cast<int64_t>(n) * Cout + co) * s_out;
                for (int64_t i = 0; i < s_out; ++i) row[i] += bv[co];
            }
        }
    }
    std::vector<Var> parents = b.defined() ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    auto node = make_node(std::move(v), std::move(parents));
    if (node->requires_grad)
        node->backprop = [adj, Cin, Cout, krows, s_in, s_out, N](Node& nd) {
            const Tensor& xv = nd.parents[0].value();
            const Tensor& wv = nd.parents[1].value();
            bool has_bias = nd.parents.size() == 3;
            std::vector<double> col(krows * s_in);
            ConstMatMap Wm(wv.data(), Cin, krows);
            for (int n = 0; n < N; ++n) {
                // im2col of the output gradient in the adjoint geometry
                im2col(nd.grad.data() + static_cast<int64_t>(n) * Cout * s_out, adj, col.data());
                ConstMatMap C(col.data(), krows, s_in);
                if (nd.parents[0].requires_grad()) {
                    MatMap XG(nd.parents[0].node()->ensure_grad().data() +
                                  static_cast<int64_t>(n) * Cin * s_in,
                              Cin, s_in);
                    XG.noalias() += Wm * C;
                }
                if (nd.parents[1].requires_grad()) {
                    ConstMatMap X(xv.data() + static_cast<int64_t>(n) * Cin * s_in, Cin, s_in);
                    MatMap WG(nd.parents[1].node()->ensure_grad().data(), Cin, krows);
                    WG.noalias() += X * C.transpose();
                }
                if (has_bias && nd.parents[2].requires_grad()) {
                    Tensor& bg = nd.parents[2].node()->ensure_grad();
                    for (int co = 0; co < Cout; ++co) {
                        const double* row = nd.grad.data() + (static_cast<int64_t>(n) * Cout + co) * s_out;
                        double s = 0;
                        for (int64_t i = 0; i < s_out; ++i) s += row[i];
                        bg[co] += s;
                    }
                }
            }
        };
    return Var(node);
}

Var add_channel_bias(const Var& x, const Var& b) {
    const Tensor& xv = x.value();
    const Tensor& bv = b.value();
    if (xv.rank() < 2 || bv.rank() != 2 || bv.dim(0) != xv.dim(0) || bv.dim(1) != xv.dim(1))
        throw ShapeError("add_channel_bias: need x [N,C,...], b [N,C]");
    int N = xv.dim(0), C = xv.dim(1);
    int64_t S = xv.size() / (static_cast<int64_t>(N) * C);
    Tensor v(xv.shape());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double bias = bv[static_cast<int64_t>(n) * C + c];
            const double* src = xv.data() + (static_cast<int64_t>(n) * C + c) * S;
            double* dst = v.data() + (static_cast<int64_t>(n) * C + c) * S;
            for (int64_t i = 0; i < S; ++i) dst[i] = src[i] + bias;
        }
    auto node = make_node(std::move(v), {x, b});
    if (node->requires_grad)
        node->backprop = [N, C, S](Node& nd) {
            if (nd.parents[0].requires_grad()) accumulate(*nd.parents[0].node(), nd.grad);
            if (nd.parents[1].requires_grad()) {
                Tensor& g = nd.parents[1].node()->ensure_grad();
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const double* row = nd.grad.data() + (static_cast<int64_t>(n) * C + c) * S;
                        double s = 0;
                        for (int64_t i = 0; i < S; ++i) s += row[i];
                        g[static_cast<int64_t>(n) * C + c] += s;
                    }
            }
        };
    return Var(node);
}

void backward(const Var& loss) {
    if (loss.size() != 1) throw ShapeError("backward: loss must be scalar");
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS over parents; reversed post-order is a valid
    // topological order (consumers before producers).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    visited.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].node();
            ++idx;
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->grad_ready) n->backprop(*n);
    }
}

}  // namespace scenegen::ad

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dact/error.hpp"
#include "dact/graph.hpp"
#include "dact/tensor.hpp"

namespace dact::nn {

namespace detail {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T s{0};
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Y[rows x out] = X[rows x in] * W^T, W stored [out x in].
template <typename T>
void linear_forward(const T* x, const T* w, T* y, std::size_t rows, std::size_t in, std::size_t out) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out; ++o) y[r * out + o] = dot(x + r * in, w + o * in, in);
    }
}

// dX += dY * W ; dW += dY^T * X. Either output may be null.
template <typename T>
void linear_backward(const T* dy, const T* x, const T* w, T* dx, T* dw, std::size_t rows,
                     std::size_t in, std::size_t out) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
            const T g = dy[r * out + o];
            if (g == T{0}) continue;
            if (dx) axpy(g, w + o * in, dx + r * in, in);
            if (dw) axpy(g, x + r * in, dw + o * in, in);
        }
    }
}

inline std::string operand(const char* op, const char* name) { return std::string(op) + ": operand '" + name + "'"; }

}  // namespace detail

/// Numerically stable softmax (max subtraction).
template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
    std::vector<T> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const T m = *std::max_element(p.begin(), p.end());
    T z{0};
    for (auto& v : p) {
        v = std::exp(v - m);
        z += v;
    }
    for (auto& v : p) v /= z;
    return p;
}

/// y = W x + b for x of shape [in], or row-wise for x of shape [rows x in].
/// `b` may be kNoNode for a bias-free map.
template <typename T>
NodeId dense(Graph<T>& g, NodeId x, NodeId w, NodeId b = kNoNode) {
    const auto& xv = g.value(x);
    const auto& wv = g.value(w);
    if (wv.rank() != 2) throw DimensionError(detail::operand("dense", "W") + " must be a matrix, got " + shape_string(wv.shape()));
    const std::size_t out = wv.dim(0), in = wv.dim(1);
    const bool batched = xv.rank() == 2;
    const std::size_t rows = batched ? xv.dim(0) : 1;
    const std::size_t width = batched ? xv.dim(1) : xv.size();
    if (xv.rank() > 2 || width != in) {
        throw DimensionError(detail::operand("dense", "x") + " has shape " + shape_string(xv.shape()) +
                             " but W expects input width " + std::to_string(in));
    }
    if (b != kNoNode && (g.value(b).rank() != 1 || g.value(b).size() != out)) {
        throw DimensionError(detail::operand("dense", "b") + " has shape " + shape_string(g.value(b).shape()) +
                             " but W has " + std::to_string(out) + " outputs");
    }
    Tensor<T> y(batched ? Shape{rows, out} : Shape{out});
    detail::linear_forward(xv.data(), wv.data(), y.data(), rows, in, out);
    if (b != kNoNode) {
        const auto& bv = g.value(b);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t o = 0; o < out; ++o) y[r * out + o] += bv[o];
    }
    return g.record(std::move(y), {x, w, b}, [x, w, b, rows, in, out](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        T* dx = g.needs_grad(x) ? g.grad(x).data() : nullptr;
        T* dw = g.needs_grad(w) ? g.grad(w).data() : nullptr;
        detail::linear_backward(dy.data(), g.value(x).data(), g.value(w).data(), dx, dw, rows, in, out);
        if (g.needs_grad(b)) {
            auto& db = g.grad(b);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t o = 0; o < out; ++o) db[o] += dy[r * out + o];
        }
    });
}

template <typename T>
NodeId relu(Graph<T>& g, NodeId x) {
    Tensor<T> y = g.value(x);
    for (auto& v : y.values()) v = v > T{0} ? v : T{0};
    return g.record(std::move(y), {x}, [x](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        const auto& xv = g.value(x);
        auto& dx = g.grad(x);
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (xv[i] > T{0}) dx[i] += dy[i];
    });
}

/// Inverted dropout. Identity (no node recorded) outside training or at rate 0.
template <typename T, typename Rng>
NodeId dropout(Graph<T>& g, NodeId x, double rate, bool training, Rng& rng) {
    if (!training || rate <= 0.0) return x;
    if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
    const auto& xv = g.value(x);
    std::bernoulli_distribution keep(1.0 - rate);
    const T scale = T(1.0 / (1.0 - rate));
    std::vector<T> mask(xv.size());
    Tensor<T> y(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        mask[i] = keep(rng) ? scale : T{0};
        y[i] = xv[i] * mask[i];
    }
    return g.record(std::move(y), {x}, [x, mask = std::move(mask)](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        auto& dx = g.grad(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * mask[i];
    });
}

/// Concatenates flat vectors.
template <typename T>
NodeId concat(Graph<T>& g, NodeId a, NodeId b) {
    const auto& av = g.value(a);
    const auto& bv = g.value(b);
    std::vector<T> out(av.values());
    out.insert(out.end(), bv.values().begin(), bv.values().end());
    const std::size_t na = av.size();
    return g.record(Tensor<T>::vector(std::move(out)), {a, b}, [a, b, na](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        if (g.needs_grad(a)) {
            auto& da = g.grad(a);
            for (std::size_t i = 0; i < na; ++i) da[i] += dy[i];
        }
        if (g.needs_grad(b)) {
            auto& db = g.grad(b);
            for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[na + i];
        }
    });
}

/// Row lookup into an embedding matrix [vocab x dim] -> [ids x dim]. Row 0 (PAD)
/// receives no gradient when `freeze_pad` is set.
template <typename T>
NodeId embedding(Graph<T>& g, NodeId table, std::span<const std::int32_t> ids, bool freeze_pad = true) {
    const auto& tv = g.value(table);
    if (tv.rank() != 2) throw DimensionError("embedding: table must be a matrix");
    if (ids.empty()) throw DimensionError("embedding: empty id sequence");
    const std::size_t vocab = tv.dim(0), dim = tv.dim(1);
    Tensor<T> y({ids.size(), dim});
    for (std::size_t p = 0; p < ids.size(); ++p) {
        if (ids[p] < 0 || static_cast<std::size_t>(ids[p]) >= vocab) {
            throw VocabularyError("token id " + std::to_string(ids[p]) + " outside embedding table of " +
                                  std::to_string(vocab) + " rows");
        }
        std::copy_n(tv.data() + ids[p] * dim, dim, y.data() + p * dim);
    }
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    return g.record(std::move(y), {table}, [table, saved = std::move(saved), dim, freeze_pad](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        auto& dt = g.grad(table);
        for (std::size_t p = 0; p < saved.size(); ++p) {
            if (freeze_pad && saved[p] == 0) continue;
            detail::axpy(T{1}, dy.data() + p * dim, dt.data() + saved[p] * dim, dim);
        }
    });
}

/// Valid 1-D convolution over positions: seq [L x d], kernels [F x w x d], bias [F].
template <typename T>
NodeId conv1d(Graph<T>& g, NodeId seq, NodeId kernels, NodeId bias) {
    const auto& sv = g.value(seq);
    const auto& kv = g.value(kernels);
    const auto& bv = g.value(bias);
    if (sv.rank() != 2) throw DimensionError(detail::operand("conv1d", "seq") + " must be [L x d]");
    if (kv.rank() != 3) throw DimensionError(detail::operand("conv1d", "kernels") + " must be [F x w x d]");
    const std::size_t len = sv.dim(0), d = sv.dim(1);
    const std::size_t filters = kv.dim(0), width = kv.dim(1);
    if (kv.dim(2) != d) {
        throw DimensionError(detail::operand("conv1d", "kernels") + " depth " + std::to_string(kv.dim(2)) +
                             " does not match sequence width " + std::to_string(d));
    }
    if (bv.size() != filters) throw DimensionError(detail::operand("conv1d", "bias") + " length must equal filter count");
    if (len < width) {
        throw DimensionError("conv1d: input too short (length " + std::to_string(len) + " < kernel width " +
                             std::to_string(width) + ")");
    }
    const std::size_t out_len = len - width + 1, span = width * d;
    Tensor<T> y({out_len, filters});
    for (std::size_t p = 0; p < out_len; ++p)
        for (std::size_t f = 0; f < filters; ++f)
            y.at(p, f) = detail::dot(sv.data() + p * d, kv.data() + f * span, span) + bv[f];
    return g.record(std::move(y), {seq, kernels, bias},
                    [seq, kernels, bias, out_len, filters, span, d](Graph<T>& g, NodeId self) {
                        const auto& dy = g.grad(self);
                        const auto& sv = g.value(seq);
                        const auto& kv = g.value(kernels);
                        T* ds = g.needs_grad(seq) ? g.grad(seq).data() : nullptr;
                        T* dk = g.needs_grad(kernels) ? g.grad(kernels).data() : nullptr;
                        T* db = g.needs_grad(bias) ? g.grad(bias).data() : nullptr;
                        for (std::size_t p = 0; p < out_len; ++p) {
                            for (std::size_t f = 0; f < filters; ++f) {
                                const T gy = dy.at(p, f);
                                if (db) db[f] += gy;
                                if (gy == T{0}) continue;
                                if (dk) detail::axpy(gy, sv.data() + p * d, dk + f * span, span);
                                if (ds) detail::axpy(gy, kv.data() + f * span, ds + p * d, span);
                            }
                        }
                    });
}

/// Per-column maximum over positions of X [L x d]. Positions with valid[p] ==
/// false are skipped; when none are valid the result is the zero vector. The
/// gradient goes to the first maximal position of each column.
template <typename T>
NodeId global_max_pool(Graph<T>& g, NodeId x, const std::vector<bool>& valid = {}) {
    const auto& xv = g.value(x);
    if (xv.rank() != 2 || xv.empty()) throw DimensionError("global_max_pool: empty input");
    const std::size_t len = xv.dim(0), d = xv.dim(1);
    if (!valid.empty() && valid.size() != len) throw DimensionError("global_max_pool: mask length mismatch");
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> argmax(d, none);
    Tensor<T> y({d});
    for (std::size_t p = 0; p < len; ++p) {
        if (!valid.empty() && !valid[p]) continue;
        for (std::size_t j = 0; j < d; ++j) {
            if (argmax[j] == none || xv.at(p, j) > y[j]) {
                y[j] = xv.at(p, j);
                argmax[j] = p;
            }
        }
    }
    return g.record(std::move(y), {x}, [x, argmax = std::move(argmax), d](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        auto& dx = g.grad(x);
        for (std::size_t j = 0; j < d; ++j)
            if (argmax[j] != none) dx[argmax[j] * d + j] += dy[j];
    });
}

/// Scaled dot-product multi-head self-attention without positional encoding.
/// X is [L x d_model]; each projection matrix is [d_model x d_model] in the
/// dense (out x in) convention and head h owns columns [h*dk, (h+1)*dk).
/// Keys with valid[q] == false get zero attention weight; a query with no
/// valid key produces a zero row.
template <typename T>
NodeId multi_head_self_attention(Graph<T>& g, NodeId x, NodeId wq, NodeId wk, NodeId wv, NodeId wo,
                                 std::size_t heads, const std::vector<bool>& valid = {}) {
    const auto& xv = g.value(x);
    if (xv.rank() != 2) throw DimensionError(detail::operand("attention", "X") + " must be [L x d_model]");
    const std::size_t len = xv.dim(0), dm = xv.dim(1);
    if (heads == 0 || dm % heads != 0) {
        throw ConfigError("attention: model width " + std::to_string(dm) + " is not divisible by " +
                          std::to_string(heads) + " heads");
    }
    const std::pair<NodeId, const char*> projections[] = {{wq, "W_Q"}, {wk, "W_K"}, {wv, "W_V"}, {wo, "W_O"}};
    for (auto [id, name] : projections) {
        const auto& w = g.value(id);
        if (w.rank() != 2 || w.dim(0) != dm || w.dim(1) != dm)
            throw DimensionError(detail::operand("attention", name) + " must be " + shape_string({dm, dm}) +
                                 ", got " + shape_string(w.shape()));
    }
    if (!valid.empty() && valid.size() != len) throw DimensionError("attention: mask length mismatch");
    const std::size_t dk = dm / heads;
    const T scale = T(1) / std::sqrt(T(dk));

    struct Saved {
        std::vector<T> q, k, v, attn, concat;  // attn: heads x L x L
    };
    Saved s;
    s.q.resize(len * dm);
    s.k.resize(len * dm);
    s.v.resize(len * dm);
    s.concat.assign(len * dm, T{0});
    s.attn.assign(heads * len * len, T{0});
    detail::linear_forward(xv.data(), g.value(wq).data(), s.q.data(), len, dm, dm);
    detail::linear_forward(xv.data(), g.value(wk).data(), s.k.data(), len, dm, dm);
    detail::linear_forward(xv.data(), g.value(wv).data(), s.v.data(), len, dm, dm);

    std::vector<T> scores(len);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * dk;
        for (std::size_t p = 0; p < len; ++p) {
            T* a = s.attn.data() + (h * len + p) * len;
            T mx = -std::numeric_limits<T>::infinity();
            bool any = false;
            for (std::size_t q = 0; q < len; ++q) {
                if (!valid.empty() && !valid[q]) continue;
                scores[q] = detail::dot(s.q.data() + p * dm + off, s.k.data() + q * dm + off, dk) * scale;
                mx = std::max(mx, scores[q]);
                any = true;
            }
            if (!any) continue;
            T z{0};
            for (std::size_t q = 0; q < len; ++q) {
                if (!valid.empty() && !valid[q]) continue;
                a[q] = std::exp(scores[q] - mx);
                z += a[q];
            }
            for (std::size_t q = 0; q < len; ++q) {
                if (!valid.empty() && !valid[q]) continue;
                a[q] /= z;
                detail::axpy(a[q], s.v.data() + q * dm + off, s.concat.data() + p * dm + off, dk);
            }
        }
    }
    Tensor<T> y({len, dm});
    detail::linear_forward(s.concat.data(), g.value(wo).data(), y.data(), len, dm, dm);

    return g.record(std::move(y), {x, wq, wk, wv, wo},
                    [x, wq, wk, wv, wo, heads, len, dm, dk, scale, s = std::move(s)](Graph<T>& g, NodeId self) {
        const auto& dy = g.grad(self);
        auto grad_or_null = [&g](NodeId id) { return g.needs_grad(id) ? g.grad(id).data() : nullptr; };

        std::vector<T> dconcat(len * dm, T{0});
        detail::linear_backward(dy.data(), s.concat.data(), g.value(wo).data(), dconcat.data(), grad_or_null(wo),
                                len, dm, dm);

        std::vector<T> dq(len * dm, T{0}), dk_(len * dm, T{0}), dv(len * dm, T{0});
        std::vector<T> da(len);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dk;
            for (std::size_t p = 0; p < len; ++p) {
                const T* a = s.attn.data() + (h * len + p) * len;
                const T* dh = dconcat.data() + p * dm + off;
                T weighted{0};
                for (std::size_t q = 0; q < len; ++q) {
                    if (a[q] == T{0}) {
                        da[q] = T{0};
                        continue;
                    }
                    da[q] = detail::dot(dh, s.v.data() + q * dm + off, dk);
                    detail::axpy(a[q], dh, dv.data() + q * dm + off, dk);
                    weighted += a[q] * da[q];
                }
                for (std::size_t q = 0; q < len; ++q) {
                    if (a[q] == T{0}) continue;
                    const T ds = a[q] * (da[q] - weighted) * scale;
                    detail::axpy(ds, s.k.data() + q * dm + off, dq.data() + p * dm + off, dk);
                    detail::axpy(ds, s.q.data() + p * dm + off, dk_.data() + q * dm + off, dk);
                }
            }
        }
        const T* xv = g.value(x).data();
        T* dx = grad_or_null(x);
        detail::linear_backward(dq.data(), xv, g.value(wq).data(), dx, grad_or_null(wq), len, dm, dm);
        detail::linear_backward(dk_.data(), xv, g.value(wk).data(), dx, grad_or_null(wk), len, dm, dm);
        detail::linear_backward(dv.data(), xv, g.value(wv).data(), dx, grad_or_null(wv), len, dm, dm);
    });
}

/// Cross-entropy of softmax(logits) against `label`. Returns a
/// one-element node; `probabilities`, when given, receives softmax(logits).
template <typename T>
NodeId softmax_cross_entropy(Graph<T>& g, NodeId logits, std::size_t label, std::vector<T>* probabilities = nullptr) {
    const auto& lv = g.value(logits);
    if (lv.rank() != 1) throw DimensionError("softmax_cross_entropy: logits must be a vector");
    if (label >= lv.size()) {
        throw LabelError("label index " + std::to_string(label) + " out of range for " + std::to_string(lv.size()) +
                         " classes");
    }
    auto p = softmax<T>(lv.span());
    const T m = *std::max_element(lv.values().begin(), lv.values().end());
    T z{0};
    for (auto v : lv.values()) z += std::exp(v - m);
    const T loss = std::log(z) + m - lv[label];
    if (probabilities) *probabilities = p;
    return g.record(Tensor<T>::vector({loss}), {logits}, [logits, label, p = std::move(p)](Graph<T>& g, NodeId self) {
        const T gy = g.grad(self)[0];
        auto& dl = g.grad(logits);
        for (std::size_t i = 0; i < p.size(); ++i) dl[i] += gy * (p[i] - (i == label ? T{1} : T{0}));
    });
}

}  // namespace dact::nn

// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal trainable-layer toolkit over Eigen. All parameters live in one
// flat arena (ParamStore) addressed by TensorRefs, so the optimizer, the
// gradient checker, and checkpointing all see plain contiguous arrays.
// Backward passes are hand-derived; every layer's forward fills a cache
// that its backward consumes.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "dgk/rng.hpp"
#include "dgk/scene.hpp"

namespace dgk {

/// A named slice of the flat parameter arena, interpreted as [rows x cols].
struct TensorRef {
    std::int64_t offset = -1;
    int rows = 0;
    int cols = 0;

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(rows) * cols; }
    bool valid() const noexcept { return offset >= 0; }
};

/// Registration-order layout of all parameters. The order is the arena
/// order, which checkpointing and initialization both rely on.
class ParamLayout {
public:
    TensorRef add(const std::string& name, int rows, int cols) {
        DGK_REQUIRE(rows > 0 && cols > 0, "tensor must be non-empty: " + name);
        for (const auto& [n, r] : entries_) {
            DGK_REQUIRE(n != name, "duplicate tensor name: " + name);
        }
        TensorRef ref{total_, rows, cols};
        total_ += ref.size();
        entries_.emplace_back(name, ref);
        return ref;
    }

    std::int64_t size() const noexcept { return total_; }

    const std::vector<std::pair<std::string, TensorRef>>& entries() const { return entries_; }

    const TensorRef& find(const std::string& name) const {
        for (const auto& [n, r] : entries_) {
            if (n == name) {
                return r;
            }
        }
        throw Error{"unknown tensor: " + name};
    }

private:
    std::vector<std::pair<std::string, TensorRef>> entries_;
    std::int64_t total_ = 0;
};

/// Flat value arena for parameters, gradients, or optimizer moments.
template <class S>
class ParamStore {
public:
    // The arena must be max-aligned: tensor views are Eigen maps, and with an
    // unaligned base the vectorised kernels split scalar/SIMD work based on
    // the runtime address, which breaks bitwise run-to-run reproducibility.
    using Storage = std::vector<S, Eigen::aligned_allocator<S>>;

    ParamStore() = default;
    explicit ParamStore(std::int64_t total) : data_(static_cast<std::size_t>(total), S{0}) {}

    std::int64_t size() const noexcept { return static_cast<std::int64_t>(data_.size()); }

    Eigen::Map<Matrix<S>> map(const TensorRef& r) {
        DGK_REQUIRE(r.valid() && r.offset + r.size() <= size(), "tensor ref out of range");
        return {data_.data() + r.offset, r.rows, r.cols};
    }
    Eigen::Map<const Matrix<S>> map(const TensorRef& r) const {
        DGK_REQUIRE(r.valid() && r.offset + r.size() <= size(), "tensor ref out of range");
        return {data_.data() + r.offset, r.rows, r.cols};
    }

    S* data() noexcept { return data_.data(); }
    const S* data() const noexcept { return data_.data(); }

    void zero() { std::fill(data_.begin(), data_.end(), S{0}); }

    Storage& raw() noexcept { return data_; }
    const Storage& raw() const noexcept { return data_; }

private:
    Storage data_;
};

/// Transformer-style init: truncated normal (0.02, clipped at 2 sigma) for
/// weight matrices, zeros for biases, ones for LayerNorm gains. Classified
/// by name suffix, which the layer constructors guarantee.
template <class S>
inline void init_params(const ParamLayout& layout, ParamStore<S>& store, Rng& rng,
                        double weight_std = 0.02) {
    DGK_REQUIRE(store.size() == layout.size(), "store/layout size mismatch");
    for (const auto& [name, ref] : layout.entries()) {
        auto m = store.map(ref);
        const bool is_bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
        const bool is_gain = name.size() >= 2 && name.compare(name.size() - 2, 2, ".g") == 0;
        if (is_gain) {
            m.setOnes();
        } else if (is_bias) {
            m.setZero();
        } else {
            for (int i = 0; i < m.rows(); ++i) {
                for (int j = 0; j < m.cols(); ++j) {
                    m(i, j) = static_cast<S>(rng.truncated_normal(weight_std));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Linear

template <class S>
struct Linear {
    TensorRef w;  // [in x out]
    TensorRef b;  // [1 x out]
    int in = 0;
    int out = 0;

    static Linear create(ParamLayout& layout, const std::string& prefix, int in, int out) {
        Linear l;
        l.in = in;
        l.out = out;
        l.w = layout.add(prefix + ".w", in, out);
        l.b = layout.add(prefix + ".b", 1, out);
        return l;
    }

    Matrix<S> forward(const ParamStore<S>& p, const Matrix<S>& x) const {
        DGK_REQUIRE(x.cols() == in, "linear: input width mismatch");
        Matrix<S> y(x.rows(), out);
        y.noalias() = x * p.map(w);
        y.rowwise() += p.map(b).row(0);
        return y;
    }

    /// Accumulates parameter grads; returns dL/dx.
    Matrix<S> backward(const ParamStore<S>& p, ParamStore<S>& g, const Matrix<S>& x,
                       const Matrix<S>& dy) const {
        g.map(w).noalias() += x.transpose() * dy;
        g.map(b).row(0) += dy.colwise().sum();
        Matrix<S> dx(x.rows(), in);
        dx.noalias() = dy * p.map(w).transpose();
        return dx;
    }
};

// ---------------------------------------------------------------------------
// LayerNorm (row-wise)

template <class S>
struct LayerNormCache {
    Matrix<S> xhat;    // normalized input
    Vector<S> rstd;    // per-row 1/std
};

template <class S>
struct LayerNorm {
    TensorRef g;  // gain [1 x d]
    TensorRef b;  // bias [1 x d]
    int d = 0;
    static constexpr double kEps = 1e-5;

    static LayerNorm create(ParamLayout& layout, const std::string& prefix, int d) {
        LayerNorm ln;
        ln.d = d;
        ln.g = layout.add(prefix + ".g", 1, d);
        ln.b = layout.add(prefix + ".b", 1, d);
        return ln;
    }

    Matrix<S> forward(const ParamStore<S>& p, const Matrix<S>& x, LayerNormCache<S>* cache) const {
        DGK_REQUIRE(x.cols() == d, "layernorm: width mismatch");
        const auto n = x.rows();
        Matrix<S> xhat(n, d);
        Vector<S> rstd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const S mu = x.row(i).mean();
            const S var = (x.row(i).array() - mu).square().mean();
            const S r = S{1} / std::sqrt(var + static_cast<S>(kEps));
            xhat.row(i) = (x.row(i).array() - mu) * r;
            rstd[i] = r;
        }
        Matrix<S> y = xhat.array().rowwise() * p.map(g).row(0).array();
        y.rowwise() += p.map(b).row(0);
        if (cache != nullptr) {
            cache->xhat = std::move(xhat);
            cache->rstd = std::move(rstd);
        }
        return y;
    }

    Matrix<S> backward(const ParamStore<S>& p, ParamStore<S>& g_store,
                       const LayerNormCache<S>& c, const Matrix<S>& dy) const {
        const auto n = dy.rows();
        g_store.map(g).row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
        g_store.map(b).row(0) += dy.colwise().sum();

        Matrix<S> dx(n, d);
        const auto gain = p.map(g).row(0);
        for (Eigen::Index i = 0; i < n; ++i) {
            // dxhat = dy * gain; dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
            const auto dyh = (dy.row(i).array() * gain.array()).eval();
            const S m1 = dyh.mean();
            const S m2 = (dyh * c.xhat.row(i).array()).mean();
            dx.row(i) = (c.rstd[i] * (dyh - m1 - c.xhat.row(i).array() * m2)).matrix();
        }
        return dx;
    }
};

// ---------------------------------------------------------------------------
// ReLU

template <class S>
inline Matrix<S> relu(const Matrix<S>& x) {
    return x.cwiseMax(S{0});
}

template <class S>
inline Matrix<S> relu_backward(const Matrix<S>& x, const Matrix<S>& dy) {
    return (x.array() > S{0}).template cast<S>() * dy.array();
}

// ---------------------------------------------------------------------------
// Dropout (inverted scaling; p = 0 is an exact no-op)

template <class S>
struct DropoutCache {
    Matrix<S> mask;  // empty when the layer was a no-op
};

template <class S>
inline Matrix<S> dropout_forward(const Matrix<S>& x, double p, Rng& rng, bool training,
                                 DropoutCache<std::type_identity_t<S>>* cache) {
    DGK_REQUIRE(p >= 0.0 && p < 1.0, "dropout probability must be in [0, 1)");
    if (!training || p == 0.0) {
        if (cache != nullptr) {
            cache->mask.resize(0, 0);
        }
        return x;
    }
    const S scale = static_cast<S>(1.0 / (1.0 - p));
    Matrix<S> mask(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            mask(i, j) = rng.uniform() < p ? S{0} : scale;
        }
    }
    Matrix<S> y = x.array() * mask.array();
    if (cache != nullptr) {
        cache->mask = std::move(mask);
    } else {
        throw Error{"dropout in training mode requires a cache"};
    }
    return y;
}

template <class S>
inline Matrix<S> dropout_backward(const DropoutCache<S>& c, const Matrix<S>& dy) {
    if (c.mask.size() == 0) {
        return dy;
    }
    return dy.array() * c.mask.array();
}

// ---------------------------------------------------------------------------
// Multi-head attention

template <class S>
struct AttnCache {
    Matrix<S> xq, xkv;            // layer inputs
    Matrix<S> q, k, v;            // projections including bias
    std::vector<Matrix<S>> probs; // per-head attention rows [nq x nk]
};

/// Incremental decode state: projected keys/values for all past positions.
template <class S>
struct KVCache {
    Matrix<S> k, v;  // [capacity x d]
    int len = 0;

    void reset(int capacity, int d) {
        k.setZero(capacity, d);
        v.setZero(capacity, d);
        len = 0;
    }
};

template <class S>
struct MultiHeadAttention {
    TensorRef wq, bq, wk, bk, wv, bv, wo, bo;
    int d = 0;
    int heads = 0;
    bool causal = false;

    static MultiHeadAttention create(ParamLayout& layout, const std::string& prefix, int d,
                                     int heads, bool causal) {
        DGK_REQUIRE(d % heads == 0, "d_model must divide evenly into heads");
        MultiHeadAttention a;
        a.d = d;
        a.heads = heads;
        a.causal = causal;
        a.wq = layout.add(prefix + ".wq.w", d, d);
        a.bq = layout.add(prefix + ".wq.b", 1, d);
        a.wk = layout.add(prefix + ".wk.w", d, d);
        a.bk = layout.add(prefix + ".wk.b", 1, d);
        a.wv = layout.add(prefix + ".wv.w", d, d);
        a.bv = layout.add(prefix + ".wv.b", 1, d);
        a.wo = layout.add(prefix + ".wo.w", d, d);
        a.bo = layout.add(prefix + ".wo.b", 1, d);
        return a;
    }

    int head_dim() const noexcept { return d / heads; }

    /// Full attention pass. `key_valid` (optional) masks keys out entirely;
    /// a query row with no admissible key yields a zero context row.
    Matrix<S> forward(const ParamStore<S>& p, const Matrix<S>& xq, const Matrix<S>& xkv,
                      const std::vector<std::uint8_t>* key_valid, AttnCache<S>* cache) const {
        DGK_REQUIRE(xq.cols() == d && xkv.cols() == d, "attention: width mismatch");
        DGK_REQUIRE(key_valid == nullptr ||
                        static_cast<Eigen::Index>(key_valid->size()) == xkv.rows(),
                    "attention: key mask length mismatch");
        const auto nq = xq.rows();
        const auto nk = xkv.rows();
        const int dh = head_dim();
        const S alpha = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
        const S neg_inf = -std::numeric_limits<S>::infinity();

        Matrix<S> q(nq, d), k(nk, d), v(nk, d);
        q.noalias() = xq * p.map(wq);
        q.rowwise() += p.map(bq).row(0);
        k.noalias() = xkv * p.map(wk);
        k.rowwise() += p.map(bk).row(0);
        v.noalias() = xkv * p.map(wv);
        v.rowwise() += p.map(bv).row(0);

        Matrix<S> ctx(nq, d);
        std::vector<Matrix<S>> probs(static_cast<std::size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            const auto qh = q.block(0, h * dh, nq, dh);
            const auto kh = k.block(0, h * dh, nk, dh);
            Matrix<S> scores(nq, nk);
            scores.noalias() = qh * kh.transpose();
            scores *= alpha;
            if (key_valid != nullptr) {
                for (Eigen::Index j = 0; j < nk; ++j) {
                    if ((*key_valid)[static_cast<std::size_t>(j)] == 0) {
                        scores.col(j).setConstant(neg_inf);
                    }
                }
            }
            if (causal) {
                DGK_REQUIRE(nq == nk, "causal attention requires square score matrix");
                for (Eigen::Index i = 0; i < nq; ++i) {
                    for (Eigen::Index j = i + 1; j < nk; ++j) {
                        scores(i, j) = neg_inf;
                    }
                }
            }
            // Stable softmax; fully masked rows become all-zero.
            for (Eigen::Index i = 0; i < nq; ++i) {
                const S mx = scores.row(i).maxCoeff();
                if (mx == neg_inf) {
                    scores.row(i).setZero();
                    continue;
                }
                scores.row(i) = (scores.row(i).array() - mx).exp();
                const S z = scores.row(i).sum();
                scores.row(i) /= z;
            }
            ctx.block(0, h * dh, nq, dh).noalias() = scores * v.block(0, h * dh, nk, dh);
            probs[static_cast<std::size_t>(h)] = std::move(scores);
        }

        Matrix<S> y(nq, d);
        y.noalias() = ctx * p.map(wo);
        y.rowwise() += p.map(bo).row(0);
        if (cache != nullptr) {
            cache->xq = xq;
            cache->xkv = xkv;
            cache->q = std::move(q);
            cache->k = std::move(k);
            cache->v = std::move(v);
            cache->probs = std::move(probs);
        }
        return y;
    }

    /// Accumulates parameter grads and adds input grads into dxq/dxkv.
    /// For self-attention pass the same matrix for both.
    void backward(const ParamStore<S>& p, ParamStore<S>& g, const AttnCache<S>& c,
                  const Matrix<S>& dy, Matrix<S>& dxq, Matrix<S>& dxkv) const {
        const auto nq = c.xq.rows();
        const auto nk = c.xkv.rows();
        const int dh = head_dim();
        const S alpha = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

        // y = ctx * wo + bo
        Matrix<S> ctx(nq, d);
        for (int h = 0; h < heads; ++h) {
            ctx.block(0, h * dh, nq, dh).noalias() =
                c.probs[static_cast<std::size_t>(h)] * c.v.block(0, h * dh, nk, dh);
        }
        g.map(wo).noalias() += ctx.transpose() * dy;
        g.map(bo).row(0) += dy.colwise().sum();
        Matrix<S> dctx(nq, d);
        dctx.noalias() = dy * p.map(wo).transpose();

        Matrix<S> dq(nq, d), dk(nk, d), dv(nk, d);
        for (int h = 0; h < heads; ++h) {
            const auto& probs = c.probs[static_cast<std::size_t>(h)];
            const auto dctx_h = dctx.block(0, h * dh, nq, dh);
            const auto vh = c.v.block(0, h * dh, nk, dh);
            dv.block(0, h * dh, nk, dh).noalias() = probs.transpose() * dctx_h;

            Matrix<S> dprobs(nq, nk);
            dprobs.noalias() = dctx_h * vh.transpose();
            // Softmax backward: ds = p * (dp - sum(dp * p)); masked cells have
            // p = 0 so their ds vanishes, as does an all-masked row.
            Matrix<S> dscore(nq, nk);
            for (Eigen::Index i = 0; i < nq; ++i) {
                const S dot = dprobs.row(i).cwiseProduct(probs.row(i)).sum();
                dscore.row(i) = (probs.row(i).array() * (dprobs.row(i).array() - dot)).matrix();
            }
            dq.block(0, h * dh, nq, dh).noalias() =
                alpha * (dscore * c.k.block(0, h * dh, nk, dh));
            dk.block(0, h * dh, nk, dh).noalias() =
                alpha * (dscore.transpose() * c.q.block(0, h * dh, nq, dh));
        }

        g.map(wq).noalias() += c.xq.transpose() * dq;
        g.map(bq).row(0) += dq.colwise().sum();
        g.map(wk).noalias() += c.xkv.transpose() * dk;
        g.map(bk).row(0) += dk.colwise().sum();
        g.map(wv).noalias() += c.xkv.transpose() * dv;
        g.map(bv).row(0) += dv.colwise().sum();

        dxq.noalias() += dq * p.map(wq).transpose();
        dxkv.noalias() += dk * p.map(wk).transpose();
        dxkv.noalias() += dv * p.map(wv).transpose();
    }

    /// Attention against keys/values that were projected once and reused
    /// across calls (cross-attention over a fixed memory). No causal mask.
    Matrix<S> attend_cached(const ParamStore<S>& p, const Matrix<S>& xq, const Matrix<S>& k,
                            const Matrix<S>& v,
                            const std::vector<std::uint8_t>* key_valid) const {
        DGK_REQUIRE(xq.cols() == d && k.cols() == d && v.rows() == k.rows(),
                    "attention: cached k/v shape mismatch");
        const auto nq = xq.rows();
        const auto nk = k.rows();
        const int dh = head_dim();
        const S alpha = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
        const S neg_inf = -std::numeric_limits<S>::infinity();

        Matrix<S> q(nq, d);
        q.noalias() = xq * p.map(wq);
        q.rowwise() += p.map(bq).row(0);

        Matrix<S> ctx(nq, d);
        for (int h = 0; h < heads; ++h) {
            Matrix<S> scores(nq, nk);
            scores.noalias() = q.block(0, h * dh, nq, dh) * k.block(0, h * dh, nk, dh).transpose();
            scores *= alpha;
            if (key_valid != nullptr) {
                for (Eigen::Index j = 0; j < nk; ++j) {
                    if ((*key_valid)[static_cast<std::size_t>(j)] == 0) {
                        scores.col(j).setConstant(neg_inf);
                    }
                }
            }
            for (Eigen::Index i = 0; i < nq; ++i) {
                const S mx = scores.row(i).maxCoeff();
                if (mx == neg_inf) {
                    scores.row(i).setZero();
                    continue;
                }
                scores.row(i) = (scores.row(i).array() - mx).exp();
                scores.row(i) /= scores.row(i).sum();
            }
            ctx.block(0, h * dh, nq, dh).noalias() = scores * v.block(0, h * dh, nk, dh);
        }
        Matrix<S> y(nq, d);
        y.noalias() = ctx * p.map(wo);
        y.rowwise() += p.map(bo).row(0);
        return y;
    }

    /// One incremental self-attention step: append the new position's K/V,
    /// then attend from the single new query over everything cached.
    Matrix<S> step(const ParamStore<S>& p, const Matrix<S>& x_row, KVCache<S>& kv) const {
        DGK_REQUIRE(x_row.rows() == 1 && x_row.cols() == d, "step expects one row");
        DGK_REQUIRE(kv.len < kv.k.rows(), "KV cache capacity exceeded");
        const int dh = head_dim();
        const S alpha = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

        kv.k.row(kv.len).noalias() = x_row * p.map(wk);
        kv.k.row(kv.len) += p.map(bk).row(0);
        kv.v.row(kv.len).noalias() = x_row * p.map(wv);
        kv.v.row(kv.len) += p.map(bv).row(0);
        ++kv.len;

        Matrix<S> q(1, d);
        q.noalias() = x_row * p.map(wq);
        q.row(0) += p.map(bq).row(0);

        Matrix<S> ctx(1, d);
        for (int h = 0; h < heads; ++h) {
            const auto kh = kv.k.block(0, h * dh, kv.len, dh);
            Matrix<S> s(1, kv.len);
            s.noalias() = q.block(0, h * dh, 1, dh) * kh.transpose();
            s *= alpha;
            const S mx = s.maxCoeff();
            s = (s.array() - mx).exp();
            s /= s.sum();
            ctx.block(0, h * dh, 1, dh).noalias() = s * kv.v.block(0, h * dh, kv.len, dh);
        }
        Matrix<S> y(1, d);
        y.noalias() = ctx * p.map(wo);
        y.row(0) += p.map(bo).row(0);
        return y;
    }

    /// Batched incremental self-attention: row b of x is the new token of
    /// an independent sequence whose history lives in caches[b]. All
    /// sequences must be at the same length, so the projection GEMMs batch
    /// across the whole group and only the per-sequence attention loops.
    Matrix<S> step_batch(const ParamStore<S>& p, const Matrix<S>& x,
                         std::vector<KVCache<S>>& caches) const {
        const auto batch = x.rows();
        DGK_REQUIRE(static_cast<std::size_t>(batch) == caches.size(),
                    "step_batch: cache count mismatch");
        const int dh = head_dim();
        const S alpha = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

        Matrix<S> q(batch, d), k_new(batch, d), v_new(batch, d);
        q.noalias() = x * p.map(wq);
        q.rowwise() += p.map(bq).row(0);
        k_new.noalias() = x * p.map(wk);
        k_new.rowwise() += p.map(bk).row(0);
        v_new.noalias() = x * p.map(wv);
        v_new.rowwise() += p.map(bv).row(0);

        Matrix<S> ctx(batch, d);
        for (Eigen::Index b = 0; b < batch; ++b) {
            auto& kv = caches[static_cast<std::size_t>(b)];
            DGK_REQUIRE(kv.len < kv.k.rows(), "KV cache capacity exceeded");
            kv.k.row(kv.len) = k_new.row(b);
            kv.v.row(kv.len) = v_new.row(b);
            ++kv.len;
            for (int h = 0; h < heads; ++h) {
                Matrix<S> s(1, kv.len);
                s.noalias() =
                    q.block(b, h * dh, 1, dh) * kv.k.block(0, h * dh, kv.len, dh).transpose();
                s *= alpha;
                const S mx = s.maxCoeff();
                s = (s.array() - mx).exp();
                s /= s.sum();
                ctx.block(b, h * dh, 1, dh).noalias() = s * kv.v.block(0, h * dh, kv.len, dh);
            }
        }
        Matrix<S> y(batch, d);
        y.noalias() = ctx * p.map(wo);
        y.rowwise() += p.map(bo).row(0);
        return y;
    }
};

// ---------------------------------------------------------------------------
// Two-layer MLP with ReLU

template <class S>
struct MlpCache {
    Matrix<S> x;
    Matrix<S> pre;  // before ReLU
};

template <class S>
struct Mlp {
    Linear<S> fc1, fc2;

    static Mlp create(ParamLayout& layout, const std::string& prefix, int d, int hidden) {
        Mlp m;
        m.fc1 = Linear<S>::create(layout, prefix + ".fc1", d, hidden);
        m.fc2 = Linear<S>::create(layout, prefix + ".fc2", hidden, d);
        return m;
    }

    Matrix<S> forward(const ParamStore<S>& p, const Matrix<S>& x, MlpCache<S>* cache) const {
        Matrix<S> pre = fc1.forward(p, x);
        Matrix<S> y = fc2.forward(p, relu(pre));
        if (cache != nullptr) {
            cache->x = x;
            cache->pre = std::move(pre);
        }
        return y;
    }

    Matrix<S> backward(const ParamStore<S>& p, ParamStore<S>& g, const MlpCache<S>& c,
                       const Matrix<S>& dy) const {
        const Matrix<S> h = relu(c.pre);
        const Matrix<S> dh = fc2.backward(p, g, h, dy);
        const Matrix<S> dpre = relu_backward(c.pre, dh);
        return fc1.backward(p, g, c.x, dpre);
    }
};

}  // namespace dgk

// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scene encoder: each vector row gets a local embedding (shared linear +
// LayerNorm + ReLU), every group contributes a max-pool over its valid
// members, and the concatenated [local | group-pool] tokens are fused by a
// pre-norm self-attention stack. No positional encodings across tokens: the
// input is a set, and within-track time is already a vector feature.

#pragma once

#include <string>
#include <vector>

#include "dgk/nn.hpp"
#include "dgk/scene.hpp"

namespace dgk {

struct EncoderConfig {
    int d_model = 64;
    int num_layers = 3;
    int num_heads = 4;
    int mlp_ratio = 4;
    double dropout = 0.0;

    void validate() const {
        if (d_model <= 0 || d_model % 2 != 0) {
            throw ConfigError{"d_model must be positive and even", "encoder.d_model"};
        }
        if (num_heads <= 0 || d_model % num_heads != 0) {
            throw ConfigError{"d_model must divide evenly into heads", "encoder.num_heads"};
        }
        if (num_layers <= 0) {
            throw ConfigError{"num_layers must be positive", "encoder.num_layers"};
        }
        if (mlp_ratio <= 0) {
            throw ConfigError{"mlp_ratio must be positive", "encoder.mlp_ratio"};
        }
        if (dropout < 0.0 || dropout >= 1.0) {
            throw ConfigError{"dropout must be in [0, 1)", "encoder.dropout"};
        }
    }
};

/// Fused scene context: one token per input vector plus its validity.
template <class S>
struct SceneEmbedding {
    Matrix<S> tokens;  // [n x d]
    std::vector<std::uint8_t> valid;
};

template <class S>
struct EncoderBlockCache {
    Matrix<S> x_in;
    LayerNormCache<S> ln1c;
    AttnCache<S> attnc;
    DropoutCache<S> drop1;
    Matrix<S> x_mid;
    LayerNormCache<S> ln2c;
    MlpCache<S> mlpc;
    DropoutCache<S> drop2;
};

template <class S>
struct EncoderCache {
    Matrix<S> feats;                            // [n x f]
    LayerNormCache<S> embed_lnc;
    Matrix<S> embed_pre;                        // post-norm, pre-ReLU [n x d/2]
    Matrix<S> local;                            // [n x d/2]
    std::vector<std::vector<int>> groups;       // group id -> member rows
    std::vector<std::vector<int>> pool_argmax;  // group id -> winning row per column (-1: none)
    Matrix<S> x0;                               // block-stack input [n x d]
    std::vector<EncoderBlockCache<S>> blocks;
    Matrix<S> final_in;
    LayerNormCache<S> final_lnc;
    std::vector<std::uint8_t> valid;
};

template <class S>
class Encoder {
public:
    Encoder(const EncoderConfig& cfg, ParamLayout& layout) : cfg_(cfg) {
        cfg_.validate();
        const int d = cfg_.d_model;
        const int m = d / 2;
        embed_lin_ = Linear<S>::create(layout, "enc.embed.lin", kFeatureDim, m);
        embed_ln_ = LayerNorm<S>::create(layout, "enc.embed.ln", m);
        blocks_.reserve(static_cast<std::size_t>(cfg_.num_layers));
        for (int i = 0; i < cfg_.num_layers; ++i) {
            const std::string p = "enc.block" + std::to_string(i);
            Block b;
            b.ln1 = LayerNorm<S>::create(layout, p + ".ln1", d);
            b.attn = MultiHeadAttention<S>::create(layout, p + ".attn", d, cfg_.num_heads,
                                                   /*causal=*/false);
            b.ln2 = LayerNorm<S>::create(layout, p + ".ln2", d);
            b.mlp = Mlp<S>::create(layout, p + ".mlp", d, d * cfg_.mlp_ratio);
            blocks_.push_back(b);
        }
        final_ln_ = LayerNorm<S>::create(layout, "enc.final_ln", d);
    }

    const EncoderConfig& config() const noexcept { return cfg_; }

    /// Closed-form parameter count; kept in lockstep with the constructor
    /// registrations (tests enumerate the layout to confirm).
    static std::int64_t param_count(const EncoderConfig& cfg) {
        const std::int64_t d = cfg.d_model;
        const std::int64_t m = d / 2;
        const std::int64_t r = cfg.mlp_ratio;
        const std::int64_t embed = kFeatureDim * m + 3 * m;
        const std::int64_t per_block = (4 + 2 * r) * d * d + (9 + r) * d;
        return embed + cfg.num_layers * per_block + 2 * d;
    }

    /// Per-vector token embedding: local MLP + within-group max-pool concat.
    Matrix<S> embed_vectors(const ParamStore<S>& p, const VectorSet& vs,
                            EncoderCache<S>* cache) const {
        if (vs.features.cols() != kFeatureDim) {
            throw ConfigError{"vector feature width does not match encoder input",
                              "encoder.d_model"};
        }
        const auto n = vs.features.rows();
        DGK_REQUIRE(n > 0, "empty vector set");
        const int m = cfg_.d_model / 2;

        Matrix<S> feats = vs.features.template cast<S>();
        LayerNormCache<S> lnc;
        Matrix<S> pre = embed_ln_.forward(p, embed_lin_.forward(p, feats), &lnc);
        Matrix<S> local = relu(pre);

        int num_groups = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            num_groups = std::max(num_groups, vs.group_ids[i] + 1);
        }
        std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_groups));
        for (Eigen::Index i = 0; i < n; ++i) {
            groups[static_cast<std::size_t>(vs.group_ids[i])].push_back(static_cast<int>(i));
        }

        // Max-pool over valid members only; ties resolve to the lowest row
        // index so the gradient routing below is deterministic.
        Matrix<S> pooled = Matrix<S>::Zero(num_groups, m);
        std::vector<std::vector<int>> argmax(static_cast<std::size_t>(num_groups),
                                             std::vector<int>(static_cast<std::size_t>(m), -1));
        for (int g = 0; g < num_groups; ++g) {
            for (int row : groups[static_cast<std::size_t>(g)]) {
                if (vs.valid[row] == 0) {
                    continue;
                }
                for (int c = 0; c < m; ++c) {
                    auto& win = argmax[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)];
                    if (win < 0 || local(row, c) > pooled(g, c)) {
                        pooled(g, c) = local(row, c);
                        win = row;
                    }
                }
            }
        }

        Matrix<S> x0(n, cfg_.d_model);
        x0.leftCols(m) = local;
        for (Eigen::Index i = 0; i < n; ++i) {
            x0.row(i).rightCols(m) = pooled.row(vs.group_ids[i]);
        }
        if (cache != nullptr) {
            cache->feats = std::move(feats);
            cache->embed_lnc = std::move(lnc);
            cache->embed_pre = std::move(pre);
            cache->local = std::move(local);
            cache->groups = std::move(groups);
            cache->pool_argmax = std::move(argmax);
            cache->x0 = x0;
        }
        return x0;
    }

    /// `train_rng` non-null switches on training behaviour (dropout); leave
    /// it null for inference.
    SceneEmbedding<S> encode(const ParamStore<S>& p, const VectorSet& vs, EncoderCache<S>* cache,
                             Rng* train_rng = nullptr) const {
        Matrix<S> x = embed_vectors(p, vs, cache);
        std::vector<std::uint8_t> valid(vs.valid.begin(), vs.valid.end());
        if (cache != nullptr) {
            cache->valid = valid;
            cache->blocks.resize(blocks_.size());
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            EncoderBlockCache<S> local_cache;
            EncoderBlockCache<S>* bc = cache != nullptr ? &cache->blocks[i] : &local_cache;
            bc->x_in = x;
            Matrix<S> h = blocks_[i].ln1.forward(p, x, &bc->ln1c);
            Matrix<S> sub = blocks_[i].attn.forward(p, h, h, &valid, &bc->attnc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop1);
            }
            x += sub;
            bc->x_mid = x;
            h = blocks_[i].ln2.forward(p, x, &bc->ln2c);
            sub = blocks_[i].mlp.forward(p, h, &bc->mlpc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop2);
            }
            x += sub;
            DGK_REQUIRE(x.allFinite(),
                        "non-finite activations in encoder block " + std::to_string(i));
        }
        if (cache != nullptr) {
            cache->final_in = x;
        }
        SceneEmbedding<S> out;
        out.tokens = final_ln_.forward(p, x, cache != nullptr ? &cache->final_lnc : nullptr);
        out.valid = std::move(valid);
        return out;
    }

    /// Backward from dL/d(tokens) down to the parameter gradients.
    void backward(const ParamStore<S>& p, ParamStore<S>& g, const EncoderCache<S>& c,
                  const Matrix<S>& dtokens) const {
        Matrix<S> dx = final_ln_.backward(p, g, c.final_lnc, dtokens);
        for (std::size_t i = blocks_.size(); i-- > 0;) {
            const auto& blk = blocks_[i];
            const auto& bc = c.blocks[i];
            // out = x_mid + drop(mlp(ln2(x_mid)))
            Matrix<S> dh = blk.mlp.backward(p, g, bc.mlpc, dropout_backward(bc.drop2, dx));
            dx += blk.ln2.backward(p, g, bc.ln2c, dh);
            // x_mid = x_in + drop(attn(ln1(x_in))) with shared query/key input
            Matrix<S> dqkv = Matrix<S>::Zero(dx.rows(), dx.cols());
            blk.attn.backward(p, g, bc.attnc, dropout_backward(bc.drop1, dx), dqkv, dqkv);
            dx += blk.ln1.backward(p, g, bc.ln1c, dqkv);
        }

        const int m = cfg_.d_model / 2;
        Matrix<S> dlocal = dx.leftCols(m);
        for (std::size_t gi = 0; gi < c.groups.size(); ++gi) {
            const auto& members = c.groups[gi];
            if (members.empty()) {
                continue;
            }
            Vector<S> dpool = Vector<S>::Zero(m);
            for (int row : members) {
                dpool += dx.row(row).rightCols(m).transpose();
            }
            for (int col = 0; col < m; ++col) {
                const int win = c.pool_argmax[gi][static_cast<std::size_t>(col)];
                if (win >= 0) {
                    dlocal(win, col) += dpool[col];
                }
            }
        }
        const Matrix<S> dpre = relu_backward(c.embed_pre, dlocal);
        const Matrix<S> dlin = embed_ln_.backward(p, g, c.embed_lnc, dpre);
        embed_lin_.backward(p, g, c.feats, dlin);
    }

private:
    struct Block {
        LayerNorm<S> ln1, ln2;
        MultiHeadAttention<S> attn;
        Mlp<S> mlp;
    };

    EncoderConfig cfg_;
    Linear<S> embed_lin_;
    LayerNorm<S> embed_ln_;
    std::vector<Block> blocks_;
    LayerNorm<S> final_ln_;
};

}  // namespace dgk

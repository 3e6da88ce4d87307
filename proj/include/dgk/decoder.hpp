// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Autoregressive action decoder. The input sequence is the seed position
// s_{-1} followed by positions s_0..s_{T-1}; logits row t (predicting the
// action taken at step t) is read from the transformer output above s_t, so
// it conditions on s_{<=t} and the scene embedding only. Every block
// carries causal self-attention, cross-attention to the scene tokens, and a
// feed-forward sublayer, all pre-norm. Incremental decoding reuses cached
// self-attention keys/values and memory projections.
//
// The one-shot ablation head lives here too: K learned queries attend to
// the scene and emit full trajectories plus mode scores in a single pass.

#pragma once

#include <string>
#include <vector>

#include "dgk/encoder.hpp"
#include "dgk/geometry.hpp"
#include "dgk/nn.hpp"

namespace dgk {

struct DecoderConfig {
    int d_model = 64;
    int num_layers = 3;
    int num_heads = 4;
    int mlp_ratio = 4;
    int vocab_size = 169;
    int horizon = 60;
    double dropout = 0.0;
    int one_shot_num_queries = 6;

    void validate() const {
        if (d_model <= 0) {
            throw ConfigError{"d_model must be positive", "decoder.d_model"};
        }
        if (num_heads <= 0 || d_model % num_heads != 0) {
            throw ConfigError{"d_model must divide evenly into heads", "decoder.num_heads"};
        }
        if (num_layers <= 0) {
            throw ConfigError{"num_layers must be positive", "decoder.num_layers"};
        }
        if (mlp_ratio <= 0) {
            throw ConfigError{"mlp_ratio must be positive", "decoder.mlp_ratio"};
        }
        if (vocab_size < 2) {
            throw ConfigError{"vocab_size must be at least 2", "decoder.vocab_size"};
        }
        if (horizon < 1) {
            throw ConfigError{"horizon must be at least 1", "decoder.horizon"};
        }
        if (dropout < 0.0 || dropout >= 1.0) {
            throw ConfigError{"dropout must be in [0, 1)", "decoder.dropout"};
        }
        if (one_shot_num_queries < 1) {
            throw ConfigError{"one_shot_num_queries must be at least 1",
                              "decoder.one_shot_num_queries"};
        }
    }
};

template <class S>
struct PosEmbedCache {
    Matrix<S> feats;  // [len x 2]
    LayerNormCache<S> lnc;
    Matrix<S> pre;    // post-norm, pre-ReLU
    int first_slot = 0;
};

template <class S>
struct DecoderBlockCache {
    LayerNormCache<S> ln1c;
    AttnCache<S> selfc;
    DropoutCache<S> drop1;
    LayerNormCache<S> ln2c;
    AttnCache<S> crossc;
    DropoutCache<S> drop2;
    LayerNormCache<S> ln3c;
    MlpCache<S> mlpc;
    DropoutCache<S> drop3;
};

template <class S>
struct DecoderCache {
    PosEmbedCache<S> embed;
    std::vector<DecoderBlockCache<S>> blocks;
    Matrix<S> final_in;
    LayerNormCache<S> final_lnc;
    Matrix<S> head_in;  // final-norm rows above s_0..s_{T-1}
};

/// Incremental decode state for one sequence: consumed positions, one KV
/// cache per block, and the memory key/value projections (computed once).
template <class S>
struct DecodeCache {
    std::vector<Vec2> seen;
    std::vector<KVCache<S>> self_kv;
    std::vector<Matrix<S>> cross_k, cross_v;
    std::vector<std::uint8_t> mem_valid;
    bool primed = false;
};

/// Same thing for a batch of sequences sharing one scene embedding.
template <class S>
struct BatchedDecodeState {
    int batch = 0;
    int len = 0;                                  // tokens consumed per sequence
    std::vector<std::vector<KVCache<S>>> self_kv; // [layer][sample]
    std::vector<Matrix<S>> cross_k, cross_v;      // per layer, shared memory
    std::vector<std::uint8_t> mem_valid;
};

template <class S>
class Decoder {
public:
    Decoder(const DecoderConfig& cfg, ParamLayout& layout) : cfg_(cfg) {
        cfg_.validate();
        const int d = cfg_.d_model;
        embed_lin_ = Linear<S>::create(layout, "dec.embed.lin", 2, d);
        embed_ln_ = LayerNorm<S>::create(layout, "dec.embed.ln", d);
        pos_table_ = layout.add("dec.pos_table", cfg_.horizon + 1, d);
        blocks_.reserve(static_cast<std::size_t>(cfg_.num_layers));
        for (int i = 0; i < cfg_.num_layers; ++i) {
            const std::string pfx = "dec.block" + std::to_string(i);
            Block b;
            b.ln1 = LayerNorm<S>::create(layout, pfx + ".ln1", d);
            b.self_attn = MultiHeadAttention<S>::create(layout, pfx + ".self", d, cfg_.num_heads,
                                                        /*causal=*/true);
            b.ln2 = LayerNorm<S>::create(layout, pfx + ".ln2", d);
            b.cross_attn = MultiHeadAttention<S>::create(layout, pfx + ".cross", d,
                                                         cfg_.num_heads, /*causal=*/false);
            b.ln3 = LayerNorm<S>::create(layout, pfx + ".ln3", d);
            b.mlp = Mlp<S>::create(layout, pfx + ".mlp", d, d * cfg_.mlp_ratio);
            blocks_.push_back(b);
        }
        final_ln_ = LayerNorm<S>::create(layout, "dec.final_ln", d);
        head_ = Linear<S>::create(layout, "dec.head", d, cfg_.vocab_size);
    }

    const DecoderConfig& config() const noexcept { return cfg_; }

    static std::int64_t param_count(const DecoderConfig& cfg) {
        const std::int64_t d = cfg.d_model;
        const std::int64_t r = cfg.mlp_ratio;
        const std::int64_t embed = 5 * d + static_cast<std::int64_t>(cfg.horizon + 1) * d;
        const std::int64_t per_block = (8 + 2 * r) * d * d + (15 + r) * d;
        const std::int64_t head = d * cfg.vocab_size + cfg.vocab_size;
        return embed + cfg.num_layers * per_block + 2 * d + head;
    }

    /// Affine map -> LayerNorm -> ReLU on each position, then the learned
    /// temporal encoding for its sequence slot is added.
    Matrix<S> embed_positions(const ParamStore<S>& p, const std::vector<Vec2>& positions,
                              int first_slot, PosEmbedCache<S>* cache) const {
        const auto len = static_cast<Eigen::Index>(positions.size());
        DGK_REQUIRE(len > 0, "empty position sequence");
        DGK_REQUIRE(first_slot >= 0 && first_slot + len <= cfg_.horizon + 1,
                    "position sequence exceeds decoder horizon");
        Matrix<S> feats(len, 2);
        for (Eigen::Index i = 0; i < len; ++i) {
            feats(i, 0) = static_cast<S>(positions[static_cast<std::size_t>(i)].x);
            feats(i, 1) = static_cast<S>(positions[static_cast<std::size_t>(i)].y);
        }
        LayerNormCache<S> lnc;
        Matrix<S> pre = embed_ln_.forward(p, embed_lin_.forward(p, feats), &lnc);
        Matrix<S> x = relu(pre);
        x += p.map(pos_table_).middleRows(first_slot, len);
        if (cache != nullptr) {
            cache->feats = std::move(feats);
            cache->lnc = std::move(lnc);
            cache->pre = std::move(pre);
            cache->first_slot = first_slot;
        }
        return x;
    }

    /// Parallel teacher-forced pass. `positions` is [s_{-1}, s_0 .. s_{T-1}]
    /// (length T+1); the result is [T x vocab], row t = logits for a_t.
    /// `train_rng` non-null switches on training behaviour (dropout).
    Matrix<S> forward_teacher_forced(const ParamStore<S>& p, const std::vector<Vec2>& positions,
                                     const SceneEmbedding<S>& mem, DecoderCache<S>* cache,
                                     Rng* train_rng = nullptr) const {
        DGK_REQUIRE(positions.size() >= 2, "need the seed and at least one position");
        const auto len = static_cast<Eigen::Index>(positions.size());
        Matrix<S> x = embed_positions(p, positions, 0, cache != nullptr ? &cache->embed : nullptr);
        if (cache != nullptr) {
            cache->blocks.resize(blocks_.size());
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            DecoderBlockCache<S> scratch;
            DecoderBlockCache<S>* bc = cache != nullptr ? &cache->blocks[i] : &scratch;
            const auto& blk = blocks_[i];
            Matrix<S> h = blk.ln1.forward(p, x, &bc->ln1c);
            Matrix<S> sub = blk.self_attn.forward(p, h, h, nullptr, &bc->selfc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop1);
            }
            x += sub;
            h = blk.ln2.forward(p, x, &bc->ln2c);
            sub = blk.cross_attn.forward(p, h, mem.tokens, &mem.valid, &bc->crossc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop2);
            }
            x += sub;
            h = blk.ln3.forward(p, x, &bc->ln3c);
            sub = blk.mlp.forward(p, h, &bc->mlpc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop3);
            }
            x += sub;
            DGK_REQUIRE(x.allFinite(),
                        "non-finite activations in decoder block " + std::to_string(i));
        }
        if (cache != nullptr) {
            cache->final_in = x;
        }
        Matrix<S> y = final_ln_.forward(p, x, cache != nullptr ? &cache->final_lnc : nullptr);
        Matrix<S> head_in = y.bottomRows(len - 1);
        Matrix<S> logits = head_.forward(p, head_in);
        if (cache != nullptr) {
            cache->head_in = std::move(head_in);
        }
        return logits;
    }

    /// Backward through the teacher-forced pass. Returns dL/d(memory tokens)
    /// so the encoder backward can continue from it.
    Matrix<S> backward(const ParamStore<S>& p, ParamStore<S>& g, const DecoderCache<S>& c,
                       const Matrix<S>& dlogits) const {
        const auto len = c.final_in.rows();
        Matrix<S> dfinal_out = Matrix<S>::Zero(len, cfg_.d_model);
        dfinal_out.bottomRows(len - 1) = head_.backward(p, g, c.head_in, dlogits);
        Matrix<S> dx = final_ln_.backward(p, g, c.final_lnc, dfinal_out);

        Matrix<S> dmem = Matrix<S>::Zero(c.blocks[0].crossc.xkv.rows(), cfg_.d_model);
        for (std::size_t i = blocks_.size(); i-- > 0;) {
            const auto& blk = blocks_[i];
            const auto& bc = c.blocks[i];
            Matrix<S> dh = blk.mlp.backward(p, g, bc.mlpc, dropout_backward(bc.drop3, dx));
            dx += blk.ln3.backward(p, g, bc.ln3c, dh);
            Matrix<S> dq = Matrix<S>::Zero(len, cfg_.d_model);
            blk.cross_attn.backward(p, g, bc.crossc, dropout_backward(bc.drop2, dx), dq, dmem);
            dx += blk.ln2.backward(p, g, bc.ln2c, dq);
            Matrix<S> dqkv = Matrix<S>::Zero(len, cfg_.d_model);
            blk.self_attn.backward(p, g, bc.selfc, dropout_backward(bc.drop1, dx), dqkv, dqkv);
            dx += blk.ln1.backward(p, g, bc.ln1c, dqkv);
        }

        // Position embedding: y = relu(ln(lin(feats))) + pos_table rows.
        g.map(pos_table_).middleRows(c.embed.first_slot, len) += dx;
        const Matrix<S> dpre = relu_backward(c.embed.pre, dx);
        const Matrix<S> dlin = embed_ln_.backward(p, g, c.embed.lnc, dpre);
        embed_lin_.backward(p, g, c.embed.feats, dlin);
        return dmem;
    }

    /// Incremental decode. `prefix` is [s_{-1} .. s_t]; the cache must hold
    /// a strict prefix of it (empty caches are primed on the spot). Returns
    /// the logits row for a_t. Matches the teacher-forced pass exactly up
    /// to floating-point reassociation.
    Matrix<S> forward_step(const ParamStore<S>& p, const std::vector<Vec2>& prefix,
                           DecodeCache<S>& cache, const SceneEmbedding<S>& mem) const {
        DGK_REQUIRE(prefix.size() >= 2, "prefix must include the seed and current position");
        DGK_REQUIRE(static_cast<int>(prefix.size()) <= cfg_.horizon + 1,
                    "prefix exceeds decoder horizon");
        if (!cache.primed) {
            prime_cache(p, mem, cache);
        }
        if (cache.seen.size() >= prefix.size()) {
            throw Error{"cache/prefix mismatch: cache is not shorter than the prefix"};
        }
        for (std::size_t i = 0; i < cache.seen.size(); ++i) {
            if (!(cache.seen[i] == prefix[i])) {
                throw Error{"cache/prefix mismatch: cached positions diverge from the prefix"};
            }
        }
        Matrix<S> logits;
        for (std::size_t i = cache.seen.size(); i < prefix.size(); ++i) {
            const bool last = i + 1 == prefix.size();
            logits = advance(p, prefix[i], static_cast<int>(i), cache, last);
            cache.seen.push_back(prefix[i]);
        }
        return logits;
    }

    /// Prepares a batch of B rollouts over one scene embedding.
    void begin_batch(const ParamStore<S>& p, const SceneEmbedding<S>& mem, int batch,
                     BatchedDecodeState<S>& st) const {
        DGK_REQUIRE(batch >= 1, "batch must be at least 1");
        st.batch = batch;
        st.len = 0;
        st.mem_valid = mem.valid;
        st.cross_k.resize(blocks_.size());
        st.cross_v.resize(blocks_.size());
        st.self_kv.assign(blocks_.size(), std::vector<KVCache<S>>(
                                              static_cast<std::size_t>(batch)));
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            const auto& a = blocks_[l].cross_attn;
            st.cross_k[l].noalias() = mem.tokens * p.map(a.wk);
            st.cross_k[l].rowwise() += p.map(a.bk).row(0);
            st.cross_v[l].noalias() = mem.tokens * p.map(a.wv);
            st.cross_v[l].rowwise() += p.map(a.bv).row(0);
            for (auto& kv : st.self_kv[l]) {
                kv.reset(cfg_.horizon + 1, cfg_.d_model);
            }
        }
    }

    /// Feeds one position per rollout (all at the same sequence slot) and
    /// returns the [B x vocab] logits for the next action of each.
    Matrix<S> step_batch(const ParamStore<S>& p, const Matrix<S>& positions,
                         BatchedDecodeState<S>& st) const {
        DGK_REQUIRE(positions.rows() == st.batch && positions.cols() == 2,
                    "step_batch: positions must be [batch x 2]");
        DGK_REQUIRE(st.len < cfg_.horizon + 1, "batched decode exceeds horizon");
        LayerNormCache<S> lnc;
        Matrix<S> x = relu(embed_ln_.forward(p, embed_lin_.forward(p, positions), &lnc));
        x.rowwise() += p.map(pos_table_).row(st.len);
        ++st.len;
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            const auto& blk = blocks_[l];
            Matrix<S> h = blk.ln1.forward(p, x, nullptr);
            x += blk.self_attn.step_batch(p, h, st.self_kv[l]);
            h = blk.ln2.forward(p, x, nullptr);
            x += blk.cross_attn.attend_cached(p, h, st.cross_k[l], st.cross_v[l],
                                              &st.mem_valid);
            h = blk.ln3.forward(p, x, nullptr);
            x += blk.mlp.forward(p, h, nullptr);
        }
        return head_.forward(p, final_ln_.forward(p, x, nullptr));
    }

private:
    struct Block {
        LayerNorm<S> ln1, ln2, ln3;
        MultiHeadAttention<S> self_attn, cross_attn;
        Mlp<S> mlp;
    };

    void prime_cache(const ParamStore<S>& p, const SceneEmbedding<S>& mem,
                     DecodeCache<S>& cache) const {
        cache.self_kv.assign(blocks_.size(), KVCache<S>{});
        cache.cross_k.resize(blocks_.size());
        cache.cross_v.resize(blocks_.size());
        cache.mem_valid = mem.valid;
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            cache.self_kv[l].reset(cfg_.horizon + 1, cfg_.d_model);
            const auto& a = blocks_[l].cross_attn;
            cache.cross_k[l].noalias() = mem.tokens * p.map(a.wk);
            cache.cross_k[l].rowwise() += p.map(a.bk).row(0);
            cache.cross_v[l].noalias() = mem.tokens * p.map(a.wv);
            cache.cross_v[l].rowwise() += p.map(a.bv).row(0);
        }
        cache.primed = true;
    }

    /// Pushes one position through every block; computes logits only when
    /// the caller needs them (the last token of a step call).
    Matrix<S> advance(const ParamStore<S>& p, const Vec2& pos, int slot, DecodeCache<S>& cache,
                      bool want_logits) const {
        Matrix<S> x = embed_positions(p, {pos}, slot, nullptr);
        for (std::size_t l = 0; l < blocks_.size(); ++l) {
            const auto& blk = blocks_[l];
            Matrix<S> h = blk.ln1.forward(p, x, nullptr);
            x += blk.self_attn.step(p, h, cache.self_kv[l]);
            h = blk.ln2.forward(p, x, nullptr);
            x += blk.cross_attn.attend_cached(p, h, cache.cross_k[l], cache.cross_v[l],
                                              &cache.mem_valid);
            h = blk.ln3.forward(p, x, nullptr);
            x += blk.mlp.forward(p, h, nullptr);
        }
        if (!want_logits) {
            return {};
        }
        return head_.forward(p, final_ln_.forward(p, x, nullptr));
    }

    DecoderConfig cfg_;
    Linear<S> embed_lin_;
    LayerNorm<S> embed_ln_;
    TensorRef pos_table_;
    std::vector<Block> blocks_;
    LayerNorm<S> final_ln_;
    Linear<S> head_;
};

// ---------------------------------------------------------------------------
// One-shot ablation decoder

template <class S>
struct OneShotOutput {
    Matrix<S> traj;    // [K x 2T], step t at columns (2t, 2t+1)
    Vector<S> scores;  // [K] mode logits
};

template <class S>
struct OneShotCache {
    std::vector<DecoderBlockCache<S>> blocks;
    Matrix<S> final_in;
    LayerNormCache<S> final_lnc;
    Matrix<S> head_in;
};

/// Non-autoregressive baseline: K learned queries self-attend, cross-attend
/// to the scene tokens, and regress whole trajectories in one pass.
template <class S>
class OneShotDecoder {
public:
    OneShotDecoder(const DecoderConfig& cfg, ParamLayout& layout) : cfg_(cfg) {
        cfg_.validate();
        const int d = cfg_.d_model;
        queries_ = layout.add("dec.queries", cfg_.one_shot_num_queries, d);
        blocks_.reserve(static_cast<std::size_t>(cfg_.num_layers));
        for (int i = 0; i < cfg_.num_layers; ++i) {
            const std::string pfx = "dec.block" + std::to_string(i);
            Block b;
            b.ln1 = LayerNorm<S>::create(layout, pfx + ".ln1", d);
            b.self_attn = MultiHeadAttention<S>::create(layout, pfx + ".self", d, cfg_.num_heads,
                                                        /*causal=*/false);
            b.ln2 = LayerNorm<S>::create(layout, pfx + ".ln2", d);
            b.cross_attn = MultiHeadAttention<S>::create(layout, pfx + ".cross", d,
                                                         cfg_.num_heads, /*causal=*/false);
            b.ln3 = LayerNorm<S>::create(layout, pfx + ".ln3", d);
            b.mlp = Mlp<S>::create(layout, pfx + ".mlp", d, d * cfg_.mlp_ratio);
            blocks_.push_back(b);
        }
        final_ln_ = LayerNorm<S>::create(layout, "dec.final_ln", d);
        reg_head_ = Linear<S>::create(layout, "dec.reg_head", d, 2 * cfg_.horizon);
        score_head_ = Linear<S>::create(layout, "dec.score_head", d, 1);
    }

    const DecoderConfig& config() const noexcept { return cfg_; }

    static std::int64_t param_count(const DecoderConfig& cfg) {
        const std::int64_t d = cfg.d_model;
        const std::int64_t r = cfg.mlp_ratio;
        const std::int64_t per_block = (8 + 2 * r) * d * d + (15 + r) * d;
        const std::int64_t heads = d * 2 * cfg.horizon + 2 * cfg.horizon + d + 1;
        return cfg.one_shot_num_queries * d + cfg.num_layers * per_block + 2 * d + heads;
    }

    OneShotOutput<S> forward(const ParamStore<S>& p, const SceneEmbedding<S>& mem,
                             OneShotCache<S>* cache, Rng* train_rng = nullptr) const {
        Matrix<S> x = p.map(queries_);
        if (cache != nullptr) {
            cache->blocks.resize(blocks_.size());
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            DecoderBlockCache<S> scratch;
            DecoderBlockCache<S>* bc = cache != nullptr ? &cache->blocks[i] : &scratch;
            const auto& blk = blocks_[i];
            Matrix<S> h = blk.ln1.forward(p, x, &bc->ln1c);
            Matrix<S> sub = blk.self_attn.forward(p, h, h, nullptr, &bc->selfc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop1);
            }
            x += sub;
            h = blk.ln2.forward(p, x, &bc->ln2c);
            sub = blk.cross_attn.forward(p, h, mem.tokens, &mem.valid, &bc->crossc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop2);
            }
            x += sub;
            h = blk.ln3.forward(p, x, &bc->ln3c);
            sub = blk.mlp.forward(p, h, &bc->mlpc);
            if (train_rng != nullptr) {
                sub = dropout_forward(sub, cfg_.dropout, *train_rng, true, &bc->drop3);
            }
            x += sub;
            DGK_REQUIRE(x.allFinite(),
                        "non-finite activations in decoder block " + std::to_string(i));
        }
        if (cache != nullptr) {
            cache->final_in = x;
        }
        Matrix<S> y = final_ln_.forward(p, x, cache != nullptr ? &cache->final_lnc : nullptr);
        OneShotOutput<S> out;
        out.traj = reg_head_.forward(p, y);
        out.scores = score_head_.forward(p, y).col(0);
        if (cache != nullptr) {
            cache->head_in = std::move(y);
        }
        return out;
    }

    Matrix<S> backward(const ParamStore<S>& p, ParamStore<S>& g, const OneShotCache<S>& c,
                       const Matrix<S>& dtraj, const Vector<S>& dscores) const {
        Matrix<S> dy = reg_head_.backward(p, g, c.head_in, dtraj);
        Matrix<S> dscore_mat(dscores.size(), 1);
        dscore_mat.col(0) = dscores;
        dy += score_head_.backward(p, g, c.head_in, dscore_mat);
        Matrix<S> dx = final_ln_.backward(p, g, c.final_lnc, dy);

        Matrix<S> dmem = Matrix<S>::Zero(c.blocks[0].crossc.xkv.rows(), cfg_.d_model);
        for (std::size_t i = blocks_.size(); i-- > 0;) {
            const auto& blk = blocks_[i];
            const auto& bc = c.blocks[i];
            Matrix<S> dh = blk.mlp.backward(p, g, bc.mlpc, dropout_backward(bc.drop3, dx));
            dx += blk.ln3.backward(p, g, bc.ln3c, dh);
            Matrix<S> dq = Matrix<S>::Zero(dx.rows(), cfg_.d_model);
            blk.cross_attn.backward(p, g, bc.crossc, dropout_backward(bc.drop2, dx), dq, dmem);
            dx += blk.ln2.backward(p, g, bc.ln2c, dq);
            Matrix<S> dqkv = Matrix<S>::Zero(dx.rows(), cfg_.d_model);
            blk.self_attn.backward(p, g, bc.selfc, dropout_backward(bc.drop1, dx), dqkv, dqkv);
            dx += blk.ln1.backward(p, g, bc.ln1c, dqkv);
        }
        g.map(queries_).noalias() += dx;
        return dmem;
    }

private:
    struct Block {
        LayerNorm<S> ln1, ln2, ln3;
        MultiHeadAttention<S> self_attn, cross_attn;
        Mlp<S> mlp;
    };

    DecoderConfig cfg_;
    TensorRef queries_;
    std::vector<Block> blocks_;
    LayerNorm<S> final_ln_;
    Linear<S> reg_head_;
    Linear<S> score_head_;
};

}  // namespace dgk

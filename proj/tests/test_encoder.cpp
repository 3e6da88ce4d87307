// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dgk/encoder.hpp"
#include "dgk/simulator.hpp"

#include "support.hpp"

using dgk::Encoder;
using dgk::EncoderConfig;
using dgk::kFeatureDim;
using dgk::ParamLayout;
using dgk::ParamStore;
using dgk::Rng;
using dgk::VectorSet;
using Mat = dgk_test::Mat;
using dgk_test::random_matrix;

namespace {

VectorSet random_vector_set(Rng& rng, const std::vector<int>& group_sizes,
                            double invalid_prob = 0.2) {
    int n = 0;
    for (int s : group_sizes) {
        n += s;
    }
    VectorSet vs;
    vs.features = random_matrix(rng, n, kFeatureDim, 0.5);
    int row = 0;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        for (int k = 0; k < group_sizes[g]; ++k) {
            vs.group_ids.push_back(static_cast<std::int32_t>(g));
            // Keep at least one valid member per group so pooling stays busy.
            const bool force_valid = k == 0;
            vs.valid.push_back(force_valid || rng.uniform() >= invalid_prob ? 1 : 0);
            ++row;
        }
    }
    (void)row;
    return vs;
}

// Straightforward scalar reference implementation: explicit loops, no Eigen
// expressions, mirroring the documented architecture one operation at a time.
struct RefParams {
    const ParamLayout& layout;
    const ParamStore<double>& store;

    std::vector<std::vector<double>> mat(const std::string& name) const {
        const auto ref = layout.find(name);
        const auto m = store.map(ref);
        std::vector<std::vector<double>> out(static_cast<std::size_t>(ref.rows));
        for (int i = 0; i < ref.rows; ++i) {
            for (int j = 0; j < ref.cols; ++j) {
                out[static_cast<std::size_t>(i)].push_back(m(i, j));
            }
        }
        return out;
    }
};

using Grid = std::vector<std::vector<double>>;

Grid ref_linear(const Grid& x, const Grid& w, const Grid& b) {
    const std::size_t n = x.size(), in = w.size(), out = w[0].size();
    Grid y(n, std::vector<double>(out, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[0][o];
            for (std::size_t k = 0; k < in; ++k) {
                acc += x[i][k] * w[k][o];
            }
            y[i][o] = acc;
        }
    }
    return y;
}

Grid ref_layernorm(const Grid& x, const Grid& gain, const Grid& bias) {
    const double eps = 1e-5;
    Grid y = x;
    for (auto& row : y) {
        double mu = 0.0;
        for (double v : row) {
            mu += v;
        }
        mu /= static_cast<double>(row.size());
        double var = 0.0;
        for (double v : row) {
            var += (v - mu) * (v - mu);
        }
        var /= static_cast<double>(row.size());
        const double rstd = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = (row[j] - mu) * rstd * gain[0][j] + bias[0][j];
        }
    }
    return y;
}

Grid ref_relu(Grid x) {
    for (auto& row : x) {
        for (auto& v : row) {
            v = std::max(0.0, v);
        }
    }
    return x;
}

Grid ref_mha(const Grid& x, const RefParams& p, const std::string& prefix, int heads,
             const std::vector<std::uint8_t>& key_valid) {
    const Grid q_all = ref_linear(x, p.mat(prefix + ".wq.w"), p.mat(prefix + ".wq.b"));
    const Grid k_all = ref_linear(x, p.mat(prefix + ".wk.w"), p.mat(prefix + ".wk.b"));
    const Grid v_all = ref_linear(x, p.mat(prefix + ".wv.w"), p.mat(prefix + ".wv.b"));
    const std::size_t n = x.size();
    const std::size_t d = q_all[0].size();
    const std::size_t dh = d / static_cast<std::size_t>(heads);
    Grid ctx(n, std::vector<double>(d, 0.0));
    for (int h = 0; h < heads; ++h) {
        const std::size_t off = static_cast<std::size_t>(h) * dh;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> scores(n, -std::numeric_limits<double>::infinity());
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (key_valid[j] == 0) {
                    continue;
                }
                double s = 0.0;
                for (std::size_t k = 0; k < dh; ++k) {
                    s += q_all[i][off + k] * k_all[j][off + k];
                }
                s /= std::sqrt(static_cast<double>(dh));
                scores[j] = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            std::vector<double> probs(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (scores[j] != -std::numeric_limits<double>::infinity()) {
                    probs[j] = std::exp(scores[j] - mx);
                    z += probs[j];
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                probs[j] = z > 0.0 ? probs[j] / z : 0.0;
                for (std::size_t k = 0; k < dh; ++k) {
                    ctx[i][off + k] += probs[j] * v_all[j][off + k];
                }
            }
        }
    }
    return ref_linear(ctx, p.mat(prefix + ".wo.w"), p.mat(prefix + ".wo.b"));
}

Grid ref_add(Grid a, const Grid& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            a[i][j] += b[i][j];
        }
    }
    return a;
}

Grid ref_encode(const VectorSet& vs, const RefParams& p, const EncoderConfig& cfg) {
    const int n = vs.size();
    const int m = cfg.d_model / 2;
    Grid feats(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kFeatureDim; ++j) {
            feats[static_cast<std::size_t>(i)].push_back(vs.features(i, j));
        }
    }
    const Grid local = ref_relu(ref_layernorm(
        ref_linear(feats, p.mat("enc.embed.lin.w"), p.mat("enc.embed.lin.b")),
        p.mat("enc.embed.ln.g"), p.mat("enc.embed.ln.b")));

    int num_groups = 0;
    for (int i = 0; i < n; ++i) {
        num_groups = std::max(num_groups, vs.group_ids[static_cast<std::size_t>(i)] + 1);
    }
    Grid pooled(static_cast<std::size_t>(num_groups), std::vector<double>(m, 0.0));
    std::vector<bool> any(static_cast<std::size_t>(num_groups), false);
    for (int i = 0; i < n; ++i) {
        if (vs.valid[static_cast<std::size_t>(i)] == 0) {
            continue;
        }
        const auto g = static_cast<std::size_t>(vs.group_ids[static_cast<std::size_t>(i)]);
        for (int c = 0; c < m; ++c) {
            const double v = local[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            if (!any[g] || v > pooled[g][static_cast<std::size_t>(c)]) {
                pooled[g][static_cast<std::size_t>(c)] = v;
            }
        }
        any[g] = true;
    }
    Grid x(static_cast<std::size_t>(n), std::vector<double>(cfg.d_model, 0.0));
    for (int i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(vs.group_ids[static_cast<std::size_t>(i)]);
        for (int c = 0; c < m; ++c) {
            x[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] =
                local[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            x[static_cast<std::size_t>(i)][static_cast<std::size_t>(m + c)] =
                pooled[g][static_cast<std::size_t>(c)];
        }
    }

    for (int layer = 0; layer < cfg.num_layers; ++layer) {
        const std::string pf = "enc.block" + std::to_string(layer);
        const Grid h1 = ref_layernorm(x, p.mat(pf + ".ln1.g"), p.mat(pf + ".ln1.b"));
        x = ref_add(x, ref_mha(h1, p, pf + ".attn", cfg.num_heads, vs.valid));
        const Grid h2 = ref_layernorm(x, p.mat(pf + ".ln2.g"), p.mat(pf + ".ln2.b"));
        const Grid hidden = ref_relu(
            ref_linear(h2, p.mat(pf + ".mlp.fc1.w"), p.mat(pf + ".mlp.fc1.b")));
        x = ref_add(x, ref_linear(hidden, p.mat(pf + ".mlp.fc2.w"), p.mat(pf + ".mlp.fc2.b")));
    }
    return ref_layernorm(x, p.mat("enc.final_ln.g"), p.mat("enc.final_ln.b"));
}

}  // namespace

TEST_CASE("encoder output shape and parameter accounting") {
    for (const int d : {36, 72, 136}) {
        EncoderConfig cfg;
        cfg.d_model = d;
        ParamLayout layout;
        Encoder<double> enc{cfg, layout};
        CHECK(layout.size() == Encoder<double>::param_count(cfg));
    }

    // Single-vector input.
    EncoderConfig cfg;
    cfg.d_model = 16;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{3};
    dgk::init_params(layout, params, rng);
    VectorSet vs;
    vs.features = random_matrix(rng, 1, kFeatureDim);
    vs.group_ids = {0};
    vs.valid = {1};
    const auto out = enc.encode(params, vs, nullptr);
    CHECK(out.tokens.rows() == 1);
    CHECK(out.tokens.cols() == 16);
    CHECK(out.valid.size() == 1);
}

TEST_CASE("doubling width roughly quadruples matrix-heavy layers") {
    EncoderConfig small;
    small.d_model = 32;
    EncoderConfig big;
    big.d_model = 64;
    const auto ratio = static_cast<double>(Encoder<double>::param_count(big)) /
                       static_cast<double>(Encoder<double>::param_count(small));
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("config validation") {
    EncoderConfig cfg;
    cfg.d_model = 15;  // odd
    ParamLayout layout;
    CHECK_THROWS_AS((Encoder<double>{cfg, layout}), dgk::ConfigError);
    cfg.d_model = 16;
    cfg.num_heads = 3;
    ParamLayout l2;
    CHECK_THROWS_AS((Encoder<double>{cfg, l2}), dgk::ConfigError);
    cfg.num_heads = 2;
    cfg.dropout = 1.0;
    ParamLayout l3;
    CHECK_THROWS_AS((Encoder<double>{cfg, l3}), dgk::ConfigError);
}

TEST_CASE("feature width mismatch is a config error") {
    EncoderConfig cfg;
    cfg.d_model = 8;
    cfg.num_heads = 2;
    cfg.num_layers = 1;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    VectorSet vs;
    vs.features = Mat::Zero(2, kFeatureDim + 1);
    vs.group_ids = {0, 0};
    vs.valid = {1, 1};
    CHECK_THROWS_AS(enc.embed_vectors(params, vs, nullptr), dgk::ConfigError);
}

TEST_CASE("duplicating a vector leaves the group pool unchanged") {
    EncoderConfig cfg;
    cfg.d_model = 12;
    cfg.num_heads = 2;
    cfg.num_layers = 1;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{5};
    dgk::init_params(layout, params, rng);

    VectorSet vs = random_vector_set(rng, {3, 2}, 0.0);
    const Mat base = enc.embed_vectors(params, vs, nullptr);

    VectorSet dup = vs;
    dup.features.conservativeResize(6, Eigen::NoChange);
    dup.features.row(5) = vs.features.row(1);  // duplicate a group-0 member
    dup.group_ids.push_back(0);
    dup.valid.push_back(1);
    const Mat with_dup = enc.embed_vectors(params, dup, nullptr);

    const int m = cfg.d_model / 2;
    for (int i = 0; i < 5; ++i) {
        CHECK((with_dup.row(i).rightCols(m) - base.row(i).rightCols(m)).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("encoder matches a scalar reference implementation") {
    EncoderConfig cfg;
    cfg.d_model = 10;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.mlp_ratio = 2;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{101};
    dgk::init_params(layout, params, rng, 0.2);

    for (int trial = 0; trial < 10; ++trial) {
        const VectorSet vs = random_vector_set(rng, {4, 3, 2});
        const auto out = enc.encode(params, vs, nullptr);
        const Grid ref = ref_encode(vs, RefParams{layout, params}, cfg);
        double worst = 0.0;
        for (int i = 0; i < vs.size(); ++i) {
            for (int j = 0; j < cfg.d_model; ++j) {
                worst = std::max(worst, std::abs(out.tokens(i, j) -
                                                 ref[static_cast<std::size_t>(i)]
                                                    [static_cast<std::size_t>(j)]));
            }
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("hand-computed two-token attention") {
    // Identity projections, one head, d=4: scores are scaled dot products of
    // the raw inputs and the context is the softmax-weighted average.
    ParamLayout layout;
    auto attn = dgk::MultiHeadAttention<double>::create(layout, "a", 4, 1, false);
    ParamStore<double> params(layout.size());
    params.map(attn.wq).setIdentity();
    params.map(attn.wk).setIdentity();
    params.map(attn.wv).setIdentity();
    params.map(attn.wo).setIdentity();

    Mat x(2, 4);
    x << 1, 0, 0, 0, 0, 1, 0, 0;
    const Mat y = attn.forward(params, x, x, nullptr, nullptr);
    // Row 0: scores (0.5, 0) -> p = e^0.5 / (e^0.5 + 1) on itself.
    const double p = std::exp(0.5) / (std::exp(0.5) + 1.0);
    CHECK(y(0, 0) == Catch::Approx(p).epsilon(1e-12));
    CHECK(y(0, 1) == Catch::Approx(1.0 - p).epsilon(1e-12));
    CHECK(y(1, 0) == Catch::Approx(1.0 - p).epsilon(1e-12));
    CHECK(y(1, 1) == Catch::Approx(p).epsilon(1e-12));
}

TEST_CASE("permutation equivariance") {
    EncoderConfig cfg;
    cfg.d_model = 12;
    cfg.num_layers = 2;
    cfg.num_heads = 3;
    cfg.mlp_ratio = 2;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{7};
    dgk::init_params(layout, params, rng, 0.3);

    for (int trial = 0; trial < 10; ++trial) {
        const VectorSet vs = random_vector_set(rng, {3, 4, 2, 3});
        const auto base = enc.encode(params, vs, nullptr);

        std::vector<int> perm(static_cast<std::size_t>(vs.size()));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        VectorSet shuffled;
        shuffled.features.resize(vs.size(), kFeatureDim);
        shuffled.group_ids.resize(static_cast<std::size_t>(vs.size()));
        shuffled.valid.resize(static_cast<std::size_t>(vs.size()));
        for (int i = 0; i < vs.size(); ++i) {
            const int src = perm[static_cast<std::size_t>(i)];
            shuffled.features.row(i) = vs.features.row(src);
            shuffled.group_ids[static_cast<std::size_t>(i)] =
                vs.group_ids[static_cast<std::size_t>(src)];
            shuffled.valid[static_cast<std::size_t>(i)] = vs.valid[static_cast<std::size_t>(src)];
        }
        const auto permuted = enc.encode(params, shuffled, nullptr);
        double worst = 0.0;
        for (int i = 0; i < vs.size(); ++i) {
            const int src = perm[static_cast<std::size_t>(i)];
            worst = std::max(worst,
                             (permuted.tokens.row(i) - base.tokens.row(src)).cwiseAbs().maxCoeff());
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("masked rows do not influence valid rows") {
    EncoderConfig cfg;
    cfg.d_model = 12;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.mlp_ratio = 2;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{11};
    dgk::init_params(layout, params, rng, 0.3);

    VectorSet vs = random_vector_set(rng, {4, 3}, 0.0);
    vs.valid = {1, 0, 1, 0, 1, 1, 0};
    const auto base = enc.encode(params, vs, nullptr);

    VectorSet scrambled = vs;
    for (int i = 0; i < vs.size(); ++i) {
        if (vs.valid[static_cast<std::size_t>(i)] == 0) {
            scrambled.features.row(i) = random_matrix(rng, 1, kFeatureDim, 10.0);
        }
    }
    const auto out = enc.encode(params, scrambled, nullptr);
    for (int i = 0; i < vs.size(); ++i) {
        if (vs.valid[static_cast<std::size_t>(i)] == 1) {
            CHECK((out.tokens.row(i) - base.tokens.row(i)).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("finite outputs on generator scenes") {
    dgk::GenConfig gen;
    const auto ds = dgk::generate_dataset(gen, 40, 1.0, 99);
    EncoderConfig cfg;
    cfg.d_model = 16;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    ParamLayout layout;
    Encoder<float> enc{cfg, layout};
    ParamStore<float> params(layout.size());
    Rng rng{13};
    dgk::init_params(layout, params, rng);
    for (const auto& scene : ds.train) {
        const auto vs = dgk::vectorize(dgk::normalize_scene(scene));
        const auto out = enc.encode(params, vs, nullptr);
        REQUIRE(out.tokens.allFinite());
    }
}

TEST_CASE("non-finite activations fail fast with the block index") {
    EncoderConfig cfg;
    cfg.d_model = 8;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{17};
    dgk::init_params(layout, params, rng);
    params.map(layout.find("enc.block0.mlp.fc2.w"))
        .setConstant(std::numeric_limits<double>::infinity());

    const VectorSet vs = random_vector_set(rng, {2, 2}, 0.0);
    CHECK_THROWS_WITH(enc.encode(params, vs, nullptr),
                      Catch::Matchers::ContainsSubstring("encoder block 0"));
}

TEST_CASE("encoder end-to-end gradient check") {
    EncoderConfig cfg;
    cfg.d_model = 8;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.mlp_ratio = 2;
    ParamLayout layout;
    Encoder<double> enc{cfg, layout};
    ParamStore<double> params(layout.size());
    Rng rng{19};
    dgk::init_params(layout, params, rng, 0.3);

    const VectorSet vs = random_vector_set(rng, {3, 2, 2});
    const Mat r = random_matrix(rng, vs.size(), cfg.d_model);

    auto loss = [&] {
        return (enc.encode(params, vs, nullptr).tokens.array() * r.array()).sum();
    };
    auto backward = [&](ParamStore<double>& g) {
        dgk::EncoderCache<double> cache;
        enc.encode(params, vs, &cache);
        enc.backward(params, g, cache, r);
    };
    dgk_test::check_param_grads(layout, params, loss, backward, 1e-4);
}

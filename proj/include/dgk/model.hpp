// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full behavior model: encoder plus one of the two decoder variants,
// all parameters in a single arena. Also the scene -> training-example glue
// and the checkpoint container (versioned header, named tensors, optimizer
// state) so a reloaded run resumes bitwise.

#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgk/action_codec.hpp"
#include "dgk/decoder.hpp"
#include "dgk/encoder.hpp"
#include "dgk/scene_io.hpp"

namespace dgk {

enum class Variant { autoregressive, one_shot };

inline const char* to_string(Variant v) {
    return v == Variant::autoregressive ? "autoregressive" : "one_shot";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "autoregressive") {
        return Variant::autoregressive;
    }
    if (s == "one_shot") {
        return Variant::one_shot;
    }
    throw ConfigError{"unknown decoder variant: " + s, "model.variant"};
}

struct ModelConfig {
    EncoderConfig encoder;
    DecoderConfig decoder;
    ActionVocabulary vocab;
    Variant variant = Variant::autoregressive;

    void validate() const {
        encoder.validate();
        decoder.validate();
        vocab.validate();
        if (decoder.vocab_size != vocab.size()) {
            throw ConfigError{"decoder vocab_size must match the action vocabulary",
                              "decoder.vocab_size"};
        }
        if (encoder.d_model != decoder.d_model) {
            // Cross-attention projects scene tokens with decoder-width maps.
            throw ConfigError{"encoder and decoder widths must match", "decoder.d_model"};
        }
    }
};

/// Desk-scale sizes, named by total parameter count of the autoregressive
/// variant: 0.1m -> d=36, 0.4m -> d=72, 1.6m -> d=136 (3+3 layers, 4 heads).
inline ModelConfig model_preset(const std::string& name) {
    int d = 0;
    if (name == "0.1m") {
        d = 36;
    } else if (name == "0.4m") {
        d = 72;
    } else if (name == "1.6m") {
        d = 136;
    } else {
        throw ConfigError{"unknown model preset (expected 0.1m, 0.4m, or 1.6m): " + name,
                          "model.preset"};
    }
    ModelConfig cfg;
    cfg.encoder.d_model = d;
    cfg.decoder.d_model = d;
    return cfg;
}

template <class S>
class BehaviorModel {
public:
    explicit BehaviorModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        encoder_.emplace(cfg_.encoder, layout_);
        if (cfg_.variant == Variant::autoregressive) {
            decoder_.emplace(cfg_.decoder, layout_);
        } else {
            one_shot_.emplace(cfg_.decoder, layout_);
        }
        params_ = ParamStore<S>(layout_.size());
    }

    const ModelConfig& config() const noexcept { return cfg_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    ParamStore<S>& params() noexcept { return params_; }
    const ParamStore<S>& params() const noexcept { return params_; }
    std::int64_t param_count() const noexcept { return layout_.size(); }

    const Encoder<S>& encoder() const { return *encoder_; }
    const Decoder<S>& decoder() const {
        DGK_REQUIRE(decoder_.has_value(), "model has no autoregressive decoder");
        return *decoder_;
    }
    const OneShotDecoder<S>& one_shot() const {
        DGK_REQUIRE(one_shot_.has_value(), "model has no one-shot decoder");
        return *one_shot_;
    }

    void init(Rng& rng) { init_params(layout_, params_, rng); }

private:
    ModelConfig cfg_;
    ParamLayout layout_;
    std::optional<Encoder<S>> encoder_;
    std::optional<Decoder<S>> decoder_;
    std::optional<OneShotDecoder<S>> one_shot_;
    ParamStore<S> params_;
};

// ---------------------------------------------------------------------------
// Scene -> example glue

/// Everything the model consumes for one scene, in the agent frame. The
/// decoder input positions are the reconstructed (grid-decoded) ones so the
/// teacher-forced inputs match what incremental rollouts produce.
struct TrainingExample {
    VectorSet vs;
    std::vector<Vec2> positions;  // [s_{-1}, s_0, .. s_{T-1}]
    TokenSequence targets;        // T action tokens
    std::vector<Vec2> future;     // reconstructed s_1..s_T
    Frame2 frame;                 // agent frame of the normalized scene
};

inline TrainingExample make_example(const Scene& scene, const ActionVocabulary& vocab) {
    DGK_REQUIRE(scene.history_len() >= 2, "need at least two history ticks");
    DGK_REQUIRE(!scene.future_gt.empty(), "scene has no ground-truth future");
    const Scene norm = normalize_scene(scene);
    const auto h = norm.target_history.size();
    DGK_REQUIRE(norm.target_history[h - 1].valid && norm.target_history[h - 2].valid,
                "the last two history ticks must be valid");

    TrainingExample ex;
    ex.frame = norm.frame;
    ex.vs = vectorize(norm);

    std::vector<Vec2> raw;
    raw.reserve(norm.future_gt.size() + 2);
    raw.push_back(norm.target_history[h - 2].position);
    raw.push_back(norm.target_history[h - 1].position);
    raw.insert(raw.end(), norm.future_gt.begin(), norm.future_gt.end());
    ex.targets = positions_to_actions(raw, vocab, PrefixMode::reconstructed);
    ex.future = actions_to_positions(ex.targets, raw[0], raw[1], vocab);

    ex.positions.reserve(ex.targets.length() + 1);
    ex.positions.push_back(raw[0]);
    ex.positions.push_back(raw[1]);
    for (std::size_t t = 0; t + 1 < ex.future.size(); ++t) {
        ex.positions.push_back(ex.future[t]);
    }
    return ex;
}

// ---------------------------------------------------------------------------
// Checkpoints

/// Optimizer and loop bookkeeping stored alongside the weights; `adam_m`
/// and `adam_v` stay empty for inference-only checkpoints.
struct TrainState {
    std::vector<double> adam_m, adam_v;
    std::int64_t step = 0;
    std::uint64_t train_seed = 0;
    Rng::State rng{};
};

namespace detail {

constexpr char kCkptMagic[4] = {'D', 'G', 'K', 'C'};
constexpr std::uint32_t kCkptVersion = 1;

inline std::string u64_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::uint64_t u64_from_hex(const std::string& s) {
    return std::stoull(s, nullptr, 16);
}

inline nlohmann::json encoder_to_json(const EncoderConfig& c) {
    return {{"d_model", c.d_model},   {"num_layers", c.num_layers},
            {"num_heads", c.num_heads}, {"mlp_ratio", c.mlp_ratio},
            {"dropout", c.dropout}};
}

inline EncoderConfig encoder_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.dropout = j.at("dropout").get<double>();
    return c;
}

inline nlohmann::json decoder_to_json(const DecoderConfig& c) {
    return {{"d_model", c.d_model},       {"num_layers", c.num_layers},
            {"num_heads", c.num_heads},   {"mlp_ratio", c.mlp_ratio},
            {"vocab_size", c.vocab_size}, {"horizon", c.horizon},
            {"dropout", c.dropout},       {"one_shot_num_queries", c.one_shot_num_queries}};
}

inline DecoderConfig decoder_from_json(const nlohmann::json& j) {
    DecoderConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.horizon = j.at("horizon").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.one_shot_num_queries = j.at("one_shot_num_queries").get<int>();
    return c;
}

inline void write_f64_array(ByteWriter& w, const std::vector<double>& a) {
    w.put(static_cast<std::uint64_t>(a.size()));
    for (double v : a) {
        w.put(v);
    }
}

inline std::vector<double> read_f64_array(ByteReader& r) {
    const auto n = r.get<std::uint64_t>();
    std::vector<double> a(static_cast<std::size_t>(n));
    for (auto& v : a) {
        v = r.get<double>();
    }
    return a;
}

}  // namespace detail

/// Writes the model (and optionally optimizer/loop state) to `path`.
/// Tensors are stored as float64 in registration order with their names
/// and shapes, so float-precision models round-trip bitwise.
template <class S>
inline void save_checkpoint(const std::string& path, const BehaviorModel<S>& model,
                            const TrainState* ts = nullptr) {
    nlohmann::json meta;
    meta["schema_version"] = detail::kCkptVersion;
    meta["scalar"] = sizeof(S) == 4 ? "f32" : "f64";
    meta["variant"] = to_string(model.config().variant);
    meta["encoder"] = detail::encoder_to_json(model.config().encoder);
    meta["decoder"] = detail::decoder_to_json(model.config().decoder);
    meta["vocab"] = {{"bins_per_axis", model.config().vocab.bins_per_axis},
                     {"max_accel", model.config().vocab.max_accel}};
    meta["step"] = ts != nullptr ? ts->step : 0;
    meta["train_seed"] = detail::u64_hex(ts != nullptr ? ts->train_seed : 0);
    nlohmann::json rng_words = nlohmann::json::array();
    const Rng::State st = ts != nullptr ? ts->rng : Rng::State{};
    for (std::uint64_t w : st) {
        rng_words.push_back(detail::u64_hex(w));
    }
    meta["rng"] = rng_words;
    meta["has_adam"] = ts != nullptr && !ts->adam_m.empty();

    detail::ByteWriter w;
    for (const char c : detail::kCkptMagic) {
        w.put(c);
    }
    w.put(detail::kCkptVersion);
    const std::string meta_str = meta.dump();
    w.put(static_cast<std::uint64_t>(meta_str.size()));
    for (const char c : meta_str) {
        w.put(c);
    }
    for (const auto& [name, ref] : model.layout().entries()) {
        w.put(static_cast<std::uint32_t>(name.size()));
        for (const char c : name) {
            w.put(c);
        }
        w.put(static_cast<std::int32_t>(ref.rows));
        w.put(static_cast<std::int32_t>(ref.cols));
        const auto m = model.params().map(ref);
        for (int i = 0; i < ref.rows; ++i) {
            for (int j = 0; j < ref.cols; ++j) {
                w.put(static_cast<double>(m(i, j)));
            }
        }
    }
    if (ts != nullptr && !ts->adam_m.empty()) {
        detail::write_f64_array(w, ts->adam_m);
        detail::write_f64_array(w, ts->adam_v);
    }
    std::ofstream out{path, std::ios::binary};
    DGK_REQUIRE(out.good(), "cannot open checkpoint for writing: " + path);
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    out.flush();
    DGK_REQUIRE(out.good(), "checkpoint write failed: " + path);
}

template <class S>
inline BehaviorModel<S> load_checkpoint(const std::string& path, TrainState* ts = nullptr) {
    std::ifstream in{path, std::ios::binary};
    if (!in.good()) {
        throw IoError{"cannot open checkpoint: " + path, 0};
    }
    const std::string data{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    detail::ByteReader r{data.data(), data.size(), 0, "checkpoint"};
    for (const char expect : detail::kCkptMagic) {
        if (r.get<char>() != expect) {
            throw IoError{"bad checkpoint magic", 0};
        }
    }
    const auto version = r.get<std::uint32_t>();
    if (version != detail::kCkptVersion) {
        throw IoError{"unsupported checkpoint version " + std::to_string(version), 4};
    }
    const auto meta_len = r.get<std::uint64_t>();
    std::string meta_str(static_cast<std::size_t>(meta_len), '\0');
    for (auto& c : meta_str) {
        c = r.get<char>();
    }
    const nlohmann::json meta = nlohmann::json::parse(meta_str);

    ModelConfig cfg;
    cfg.encoder = detail::encoder_from_json(meta.at("encoder"));
    cfg.decoder = detail::decoder_from_json(meta.at("decoder"));
    cfg.vocab.bins_per_axis = meta.at("vocab").at("bins_per_axis").get<int>();
    cfg.vocab.max_accel = meta.at("vocab").at("max_accel").get<double>();
    cfg.variant = variant_from_string(meta.at("variant").get<std::string>());

    BehaviorModel<S> model{cfg};
    for (const auto& [name, ref] : model.layout().entries()) {
        const auto name_len = r.get<std::uint32_t>();
        std::string got(name_len, '\0');
        for (auto& c : got) {
            c = r.get<char>();
        }
        if (got != name) {
            throw IoError{"checkpoint tensor order mismatch: expected " + name + ", got " + got,
                          r.position()};
        }
        const auto rows = r.get<std::int32_t>();
        const auto cols = r.get<std::int32_t>();
        if (rows != ref.rows || cols != ref.cols) {
            throw IoError{"checkpoint tensor shape mismatch for " + name, r.position()};
        }
        auto m = model.params().map(ref);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                m(i, j) = static_cast<S>(r.get<double>());
            }
        }
    }
    if (ts != nullptr) {
        ts->step = meta.at("step").get<std::int64_t>();
        ts->train_seed = detail::u64_from_hex(meta.at("train_seed").get<std::string>());
        const auto& rng_words = meta.at("rng");
        for (std::size_t i = 0; i < ts->rng.size(); ++i) {
            ts->rng[i] = detail::u64_from_hex(rng_words.at(i).get<std::string>());
        }
        if (meta.at("has_adam").get<bool>()) {
            ts->adam_m = detail::read_f64_array(r);
            ts->adam_v = detail::read_f64_array(r);
        } else {
            ts->adam_m.clear();
            ts->adam_v.clear();
        }
    }
    return model;
}

}  // namespace dgk

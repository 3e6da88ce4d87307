// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "dgk/model.hpp"
#include "dgk/simulator.hpp"

namespace {

struct TempPath {
    std::filesystem::path path;
    explicit TempPath(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {}
    ~TempPath() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

dgk::ModelConfig tiny_config() {
    dgk::ModelConfig cfg;
    cfg.encoder.d_model = 8;
    cfg.encoder.num_layers = 1;
    cfg.encoder.num_heads = 2;
    cfg.encoder.mlp_ratio = 2;
    cfg.decoder.d_model = 8;
    cfg.decoder.num_layers = 1;
    cfg.decoder.num_heads = 2;
    cfg.decoder.mlp_ratio = 2;
    cfg.decoder.vocab_size = 169;
    cfg.decoder.horizon = 12;
    return cfg;
}

}  // namespace

TEST_CASE("model presets hit their nominal sizes") {
    const auto small = dgk::model_preset("0.1m");
    const auto mid = dgk::model_preset("0.4m");
    const auto large = dgk::model_preset("1.6m");
    dgk::BehaviorModel<float> a{small}, b{mid}, c{large};
    CHECK(a.param_count() == 121525);
    CHECK(b.param_count() == 460609);
    CHECK(c.param_count() == 1601025);
    // Each preset roughly quadruples the previous one.
    CHECK(static_cast<double>(b.param_count()) / a.param_count() > 3.0);
    CHECK(static_cast<double>(c.param_count()) / b.param_count() > 3.0);
    CHECK_THROWS_AS(dgk::model_preset("7b"), dgk::ConfigError);
}

TEST_CASE("model config cross-field validation") {
    dgk::ModelConfig cfg = tiny_config();
    cfg.decoder.vocab_size = 100;  // vocab has 169 actions
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const dgk::ConfigError& e) {
        CHECK(e.field() == "decoder.vocab_size");
    }
    cfg = tiny_config();
    cfg.decoder.d_model = 16;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const dgk::ConfigError& e) {
        CHECK(e.field() == "decoder.d_model");
    }
}

TEST_CASE("training examples reconstruct the future exactly") {
    dgk::GenConfig gen;
    const auto ds = dgk::generate_dataset(gen, 20, 1.0, 77);
    for (const auto& scene : ds.train) {
        const auto ex = dgk::make_example(scene, gen.vocab);
        REQUIRE(ex.targets.tokens.size() == static_cast<std::size_t>(gen.horizon));
        REQUIRE(ex.positions.size() == static_cast<std::size_t>(gen.horizon) + 1);
        REQUIRE(ex.future.size() == static_cast<std::size_t>(gen.horizon));

        // Decoding the targets from the recorded seed pair must reproduce
        // the stored future.
        const auto decoded =
            dgk::actions_to_positions(ex.targets, ex.positions[0], ex.positions[1], gen.vocab);
        REQUIRE(decoded.size() == ex.future.size());
        for (std::size_t i = 0; i < decoded.size(); ++i) {
            CHECK(decoded[i].x == ex.future[i].x);
            CHECK(decoded[i].y == ex.future[i].y);
        }
        // The decoder input is the seed pair followed by all but the last
        // future position.
        for (std::size_t i = 2; i < ex.positions.size(); ++i) {
            CHECK(ex.positions[i].x == ex.future[i - 2].x);
            CHECK(ex.positions[i].y == ex.future[i - 2].y);
        }
    }
}

TEST_CASE("checkpoint round trip is bitwise") {
    const dgk::ModelConfig cfg = tiny_config();

    SECTION("float model") {
        dgk::BehaviorModel<float> model{cfg};
        dgk::Rng rng{42};
        model.init(rng);
        dgk::TrainState ts;
        ts.step = 137;
        ts.train_seed = 0xDEADBEEFCAFEF00Dull;
        dgk::Rng state_src{991};
        state_src.normal();
        ts.rng = state_src.state();
        ts.adam_m.assign(model.param_count(), 0.0);
        ts.adam_v.assign(model.param_count(), 0.0);
        for (std::size_t i = 0; i < model.param_count(); ++i) {
            ts.adam_m[i] = 1e-3 * static_cast<double>(i % 97);
            ts.adam_v[i] = 1e-6 * static_cast<double>(i % 31);
        }

        TempPath tmp{"dgk_ckpt_f32.bin"};
        dgk::save_checkpoint(tmp.path.string(), model, &ts);
        dgk::TrainState ts2;
        auto loaded = dgk::load_checkpoint<float>(tmp.path.string(), &ts2);

        REQUIRE(loaded.param_count() == model.param_count());
        const float* a = model.params().data();
        const float* b = loaded.params().data();
        for (std::size_t i = 0; i < model.param_count(); ++i) {
            REQUIRE(a[i] == b[i]);
        }
        CHECK(ts2.step == ts.step);
        CHECK(ts2.train_seed == ts.train_seed);
        CHECK(ts2.rng == ts.rng);
        REQUIRE(ts2.adam_m == ts.adam_m);
        REQUIRE(ts2.adam_v == ts.adam_v);
        CHECK(loaded.config().decoder.horizon == cfg.decoder.horizon);
    }

    SECTION("double model, no optimizer state") {
        dgk::BehaviorModel<double> model{cfg};
        dgk::Rng rng{43};
        model.init(rng);
        TempPath tmp{"dgk_ckpt_f64.bin"};
        dgk::save_checkpoint(tmp.path.string(), model);
        auto loaded = dgk::load_checkpoint<double>(tmp.path.string());
        const double* a = model.params().data();
        const double* b = loaded.params().data();
        for (std::size_t i = 0; i < model.param_count(); ++i) {
            REQUIRE(a[i] == b[i]);
        }
    }

    SECTION("one-shot variant") {
        dgk::ModelConfig os = cfg;
        os.variant = dgk::Variant::one_shot;
        dgk::BehaviorModel<float> model{os};
        dgk::Rng rng{44};
        model.init(rng);
        TempPath tmp{"dgk_ckpt_os.bin"};
        dgk::save_checkpoint(tmp.path.string(), model);
        auto loaded = dgk::load_checkpoint<float>(tmp.path.string());
        CHECK(loaded.config().variant == dgk::Variant::one_shot);
        const float* a = model.params().data();
        const float* b = loaded.params().data();
        for (std::size_t i = 0; i < model.param_count(); ++i) {
            REQUIRE(a[i] == b[i]);
        }
    }
}

TEST_CASE("checkpoint errors") {
    SECTION("missing file") {
        CHECK_THROWS_AS(dgk::load_checkpoint<float>("/nonexistent/nope.bin"), dgk::IoError);
    }
    SECTION("bad magic") {
        TempPath tmp{"dgk_ckpt_bad_magic.bin"};
        std::ofstream out(tmp.path, std::ios::binary);
        out << "NOPE0000000000000000";
        out.close();
        CHECK_THROWS_WITH(dgk::load_checkpoint<float>(tmp.path.string()),
                          Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("truncated tensor data") {
        dgk::BehaviorModel<float> model{tiny_config()};
        dgk::Rng rng{45};
        model.init(rng);
        TempPath full{"dgk_ckpt_full.bin"};
        dgk::save_checkpoint(full.path.string(), model);

        std::ifstream in(full.path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        in.close();
        TempPath cut{"dgk_ckpt_cut.bin"};
        std::ofstream out(cut.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_WITH(dgk::load_checkpoint<float>(cut.path.string()),
                          Catch::Matchers::ContainsSubstring("truncated checkpoint"));
    }
}

// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dgk/action_codec.hpp"
#include "dgk/rng.hpp"

using dgk::ActionVocabulary;
using dgk::Vec2;

TEST_CASE("vocabulary grid geometry") {
    const ActionVocabulary v;  // 13 bins, 0.03 half-width
    CHECK(v.size() == 169);
    CHECK(v.cell() == Catch::Approx(0.005));
    CHECK(v.zero_token() == 6 * 13 + 6);
    const auto zero = v.action(v.zero_token());
    CHECK(zero.x == 0.0);  // exact, not approximate: the grid is symmetric
    CHECK(zero.y == 0.0);
    CHECK(v.action(0).x == Catch::Approx(-0.03));
    CHECK(v.action(0).y == Catch::Approx(-0.03));
    CHECK(v.action(v.size() - 1).x == Catch::Approx(0.03));

    // Symmetry: negating a token's action lands on another token.
    for (int t = 0; t < v.size(); ++t) {
        const auto a = v.action(t);
        const int mirrored = v.quantize({-a.x, -a.y});
        const auto m = v.action(mirrored);
        CHECK(m.x == Catch::Approx(-a.x).margin(1e-15));
        CHECK(m.y == Catch::Approx(-a.y).margin(1e-15));
    }
    CHECK_THROWS_AS(v.action(-1), dgk::Error);
    CHECK_THROWS_AS(v.action(169), dgk::Error);
}

TEST_CASE("vocabulary validation rejects bad shapes") {
    CHECK_THROWS_AS(ActionVocabulary(12, 0.03), dgk::ConfigError);
    CHECK_THROWS_AS(ActionVocabulary(1, 0.03), dgk::ConfigError);
    CHECK_THROWS_AS(ActionVocabulary(13, 0.0), dgk::ConfigError);
    CHECK_NOTHROW(ActionVocabulary(3, 1.0));
}

TEST_CASE("quantize picks the nearest action, ties to the lowest index") {
    const ActionVocabulary v{5, 1.0};  // grid points at -1, -0.5, 0, 0.5, 1
    CHECK(v.quantize({0.0, 0.0}) == v.zero_token());
    CHECK(v.quantize({0.2, 0.0}) == v.zero_token());
    CHECK(v.quantize({0.3, 0.0}) == v.quantize({0.5, 0.0}));
    // Exact tie at 0.25 between axis indices 2 and 3 resolves down.
    CHECK(v.action(v.quantize({0.25, 0.0})).x == 0.0);
    CHECK(v.action(v.quantize({0.0, -0.25})).y == -0.5);
    // Both axes tied: all four corners equidistant, lowest index wins.
    const int t = v.quantize({0.25, 0.25});
    CHECK(v.action(t).x == 0.0);
    CHECK(v.action(t).y == 0.0);

    bool sat = false;
    CHECK(v.quantize({5.0, 0.0}, &sat) == v.quantize({1.0, 0.0}));
    CHECK(sat);
    sat = false;
    v.quantize({0.9, -0.9}, &sat);
    CHECK_FALSE(sat);
}

TEST_CASE("token round-trips through its own action value") {
    const ActionVocabulary v;
    for (int t = 0; t < v.size(); ++t) {
        CHECK(v.quantize(v.action(t)) == t);
    }
}

TEST_CASE("zero actions extrapolate constant velocity exactly") {
    const ActionVocabulary v;
    dgk::TokenSequence seq;
    seq.tokens.assign(5, v.zero_token());
    const auto pos = dgk::actions_to_positions(seq, {0, 0}, {1, 0}, v);
    REQUIRE(pos.size() == 5);
    for (int t = 0; t < 5; ++t) {
        CHECK(pos[static_cast<std::size_t>(t)].x == static_cast<double>(t + 2));
        CHECK(pos[static_cast<std::size_t>(t)].y == 0.0);
    }
}

TEST_CASE("single acceleration step from rest") {
    // One action (0.1, 0), then zero actions: velocity stays at 0.1/tick.
    const ActionVocabulary v{5, 0.2};  // cell 0.1, so (0.1, 0) is on-grid
    dgk::TokenSequence seq;
    seq.tokens = {v.quantize({0.1, 0.0}), v.zero_token(), v.zero_token()};
    const auto pos = dgk::actions_to_positions(seq, {0, 0}, {0, 0}, v);
    CHECK(pos[0].x == Catch::Approx(0.1));
    CHECK(pos[1].x == Catch::Approx(0.2));
    CHECK(pos[2].x == Catch::Approx(0.3));
}

TEST_CASE("constant-velocity and stationary inputs encode to all-zero tokens") {
    const ActionVocabulary v;
    std::vector<Vec2> line;
    for (int t = -1; t <= 10; ++t) {
        line.push_back({0.31 * t, -0.12 * t});
    }
    const auto tokens = dgk::positions_to_actions(line, v);
    for (const auto tok : tokens.tokens) {
        CHECK(tok == v.zero_token());
    }
    std::vector<Vec2> still(12, Vec2{3.0, 4.0});
    const auto tokens2 = dgk::positions_to_actions(still, v);
    for (const auto tok : tokens2.tokens) {
        CHECK(tok == v.zero_token());
    }
}

TEST_CASE("positions_to_actions requires two seed states") {
    const ActionVocabulary v;
    CHECK_THROWS_AS(dgk::positions_to_actions({{0, 0}, {1, 0}}, v), dgk::Error);
}

TEST_CASE("decode then encode recovers token sequences exactly") {
    const ActionVocabulary v;
    dgk::Rng rng{815};
    for (int trial = 0; trial < 200; ++trial) {
        dgk::TokenSequence seq;
        const int len = rng.uniform_int(1, 40);
        for (int t = 0; t < len; ++t) {
            seq.tokens.push_back(rng.uniform_int(0, v.size() - 1));
        }
        const Vec2 s_m1{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        const Vec2 s_0 = s_m1 + Vec2{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const auto pos = dgk::actions_to_positions(seq, s_m1, s_0, v);

        std::vector<Vec2> full{s_m1, s_0};
        full.insert(full.end(), pos.begin(), pos.end());

        for (const auto mode : {dgk::PrefixMode::reconstructed, dgk::PrefixMode::ground_truth}) {
            const auto back = dgk::positions_to_actions(full, v, mode);
            CHECK(back == seq);
            // Re-integration reproduces the positions bit-for-bit: the same
            // token sequence drives the identical chain of float operations.
            const auto pos2 = dgk::actions_to_positions(back, s_m1, s_0, v);
            for (std::size_t i = 0; i < pos.size(); ++i) {
                CHECK(pos2[i].x == pos[i].x);
                CHECK(pos2[i].y == pos[i].y);
            }
        }
    }
}

TEST_CASE("ground-truth prefix mode matches per-step second differences") {
    const ActionVocabulary v;
    dgk::Rng rng{99};
    std::vector<Vec2> pos;
    Vec2 p{0, 0}, vel{0.4, 0.1};
    pos.push_back(p);
    p += vel;
    pos.push_back(p);
    for (int t = 0; t < 20; ++t) {
        vel += {rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
        p += vel;
        pos.push_back(p);
    }
    const auto tokens = dgk::positions_to_actions(pos, v, dgk::PrefixMode::ground_truth);
    REQUIRE(tokens.length() == 20);
    // Oracle: quantize raw second differences independently.
    for (int t = 0; t < 20; ++t) {
        const auto i = static_cast<std::size_t>(t);
        const Vec2 a = pos[i + 2] - pos[i + 1] * 2.0 + pos[i];
        CHECK(tokens.tokens[i] == v.quantize(a));
    }
}

TEST_CASE("reconstructed-prefix encoding keeps position error within the cell bound") {
    // Residuals measured against the running reconstruction correct drift
    // each step, so the deviation at tick t stays within the documented
    // half-cell-diagonal-times-t envelope (and in practice within one cell).
    const ActionVocabulary v;
    dgk::Rng rng{7};
    dgk::EncodeDiagnostics diag;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Vec2> pos;
        Vec2 p{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        Vec2 vel{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
        pos.push_back(p);
        p += vel;
        pos.push_back(p);
        const int horizon = 30;
        for (int t = 0; t < horizon; ++t) {
            // Smooth accelerations within 60% of the grid extent, leaving
            // room for the drift-correction term.
            vel += {rng.uniform(-0.6, 0.6) * v.max_accel, rng.uniform(-0.6, 0.6) * v.max_accel};
            p += vel;
            pos.push_back(p);
        }
        const auto tokens = dgk::positions_to_actions(pos, v, dgk::PrefixMode::reconstructed, &diag);
        const auto recon = dgk::actions_to_positions(tokens, pos[0], pos[1], v);
        for (int t = 0; t < horizon; ++t) {
            const auto i = static_cast<std::size_t>(t);
            const double err = (recon[i] - pos[i + 2]).norm();
            CHECK(err <= v.half_cell_diagonal() * (t + 1) + 1e-12);
            CHECK(err <= v.half_cell_diagonal() + 1e-12);  // tight: drift is corrected
        }
    }
    CHECK(diag.saturated_ticks == 0);
    CHECK(diag.max_residual <= v.max_accel);
}

TEST_CASE("saturation diagnostics flag out-of-grid residuals") {
    const ActionVocabulary v;
    std::vector<Vec2> pos{{0, 0}, {0, 0}, {1.0, 0.0}, {2.0, 0.0}};  // 1 m jump: far beyond grid
    dgk::EncodeDiagnostics diag;
    const auto tokens = dgk::positions_to_actions(pos, v, dgk::PrefixMode::reconstructed, &diag);
    CHECK(diag.saturated_ticks >= 1);
    CHECK(diag.max_residual >= 1.0);
    // Clamped to the boundary action, still a valid token.
    CHECK(tokens.tokens[0] == v.quantize({v.max_accel, 0.0}));
}

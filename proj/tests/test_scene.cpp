// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dgk/rng.hpp"
#include "dgk/scene.hpp"
#include "dgk/scene_io.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

dgk::AgentState make_state(double x, double y, double heading, double vx, double vy) {
    dgk::AgentState s;
    s.position = {x, y};
    s.heading = heading;
    s.velocity = {vx, vy};
    s.acceleration = {0.1, -0.05};
    return s;
}

/// Random but structurally consistent scene for round-trip properties.
dgk::Scene random_scene(dgk::Rng& rng, int h = 5, int num_nearby = 2) {
    dgk::Scene sc;
    sc.scene_id = static_cast<std::int64_t>(rng.next_u64() >> 40);
    auto random_track = [&](int len) {
        std::vector<dgk::AgentState> states;
        dgk::Vec2 p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
        for (int t = 0; t < len; ++t) {
            dgk::AgentState s;
            s.position = p;
            s.heading = rng.uniform(-kPi * 0.999, kPi);
            s.velocity = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
            s.acceleration = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
            s.valid = rng.uniform() > 0.1;
            if (!s.valid) {
                s = dgk::AgentState::missing();
            }
            states.push_back(s);
            p += {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        }
        return states;
    };
    sc.target_history = random_track(h);
    sc.target_history.back().valid = true;  // normalization needs a valid current state
    for (int i = 0; i < num_nearby; ++i) {
        dgk::AgentTrack t;
        t.states = random_track(h);
        t.type = static_cast<dgk::AgentType>(rng.uniform_int(0, 2));
        t.id = 100 + i;
        sc.nearby.push_back(t);
    }
    dgk::Polyline pl;
    pl.id = 7;
    pl.semantic = dgk::Semantic::road_edge;
    for (int i = 0; i < 4; ++i) {
        pl.points.push_back({rng.uniform(-60.0, 60.0), rng.uniform(-60.0, 60.0)});
    }
    sc.map.push_back(pl);
    for (int t = 0; t < 6; ++t) {
        sc.future_gt.push_back({rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)});
    }
    sc.drivable.push_back({{-5, -5}, {5, -5}, {5, 5}, {-5, 5}});
    return sc;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    CHECK(dgk::wrap_angle(0.0) == 0.0);
    CHECK(dgk::wrap_angle(kPi) == Catch::Approx(kPi));
    CHECK(dgk::wrap_angle(-kPi) == Catch::Approx(kPi));  // -pi is excluded, wraps to +pi
    CHECK(dgk::wrap_angle(3 * kPi) == Catch::Approx(kPi));
    CHECK(dgk::wrap_angle(2 * kPi + 0.25) == Catch::Approx(0.25));
    CHECK(dgk::wrap_angle(-2 * kPi - 0.25) == Catch::Approx(-0.25));
    for (double a = -20.0; a < 20.0; a += 0.37) {
        const double w = dgk::wrap_angle(a);
        CHECK(w > -kPi - 1e-15);
        CHECK(w <= kPi + 1e-15);
        CHECK(std::remainder(w - a, 2 * kPi) == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("Frame2 to_world and to_local invert each other") {
    dgk::Frame2 f{{10.0, 5.0}, kPi / 2};
    const dgk::Vec2 p{1.0, 0.0};
    const auto w = f.to_world(p);
    CHECK(w.x == Catch::Approx(10.0).margin(1e-12));
    CHECK(w.y == Catch::Approx(6.0).margin(1e-12));
    const auto back = f.to_local(w);
    CHECK(back.x == Catch::Approx(1.0).margin(1e-12));
    CHECK(back.y == Catch::Approx(0.0).margin(1e-12));

    dgk::Rng rng{11};
    for (int i = 0; i < 100; ++i) {
        dgk::Frame2 g{{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)},
                      rng.uniform(-kPi, kPi)};
        const dgk::Vec2 q{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
        const auto r = g.to_local(g.to_world(q));
        CHECK(r.x == Catch::Approx(q.x).margin(1e-9));
        CHECK(r.y == Catch::Approx(q.y).margin(1e-9));
        const auto v = g.rotate_to_local(g.rotate_to_world(q));
        CHECK(v.x == Catch::Approx(q.x).margin(1e-9));
        CHECK(v.y == Catch::Approx(q.y).margin(1e-9));
    }
}

TEST_CASE("point_in_polygon handles interior, boundary, and concave shapes") {
    const dgk::Polygon square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(dgk::point_in_polygon({0.5, 0.5}, square));
    CHECK_FALSE(dgk::point_in_polygon({1.5, 0.5}, square));
    CHECK_FALSE(dgk::point_in_polygon({-0.001, 0.5}, square));
    // Boundary counts as inside: edge midpoint and vertex.
    CHECK(dgk::point_in_polygon({1.0, 0.5}, square));
    CHECK(dgk::point_in_polygon({0.0, 0.0}, square));
    CHECK(dgk::point_in_polygon({0.5, 1.0}, square));

    // L-shaped concave polygon.
    const dgk::Polygon ell{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    CHECK(dgk::point_in_polygon({0.5, 1.5}, ell));
    CHECK(dgk::point_in_polygon({1.5, 0.5}, ell));
    CHECK_FALSE(dgk::point_in_polygon({1.5, 1.5}, ell));  // inside bounding box, outside shape
    CHECK(dgk::point_in_polygon({1.0, 1.0}, ell));        // reflex vertex

    CHECK_FALSE(dgk::point_in_polygon({0.0, 0.0}, dgk::Polygon{{0, 0}, {1, 1}}));  // degenerate
}

TEST_CASE("point_in_polygon agrees with a winding-number oracle") {
    // Independent implementation: signed winding number via atan2 accumulation.
    auto winding_inside = [](const dgk::Vec2& p, const dgk::Polygon& poly) {
        double total = 0.0;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const dgk::Vec2 a = poly[i] - p;
            const dgk::Vec2 b = poly[(i + 1) % poly.size()] - p;
            total += std::atan2(a.cross(b), a.dot(b));
        }
        return std::fabs(total) > kPi;  // ~2*pi inside, ~0 outside
    };
    const dgk::Polygon poly{{0, 0}, {4, 0}, {4, 3}, {2, 1.5}, {0, 3}};
    dgk::Rng rng{42};
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const dgk::Vec2 p{rng.uniform(-1.0, 5.0), rng.uniform(-1.0, 4.0)};
        // Skip points hugging an edge, where the implementations legitimately
        // differ by the boundary rule.
        bool near_edge = false;
        for (std::size_t k = 0; k < poly.size(); ++k) {
            const dgk::Vec2 a = poly[k];
            const dgk::Vec2 ab = poly[(k + 1) % poly.size()] - a;
            double t = (p - a).dot(ab) / ab.squared_norm();
            t = std::fmin(1.0, std::fmax(0.0, t));
            if ((p - (a + ab * t)).norm() < 1e-6) {
                near_edge = true;
            }
        }
        if (near_edge) {
            continue;
        }
        ++checked;
        CHECK(dgk::point_in_polygon(p, poly) == winding_inside(p, poly));
    }
    CHECK(checked > 1500);
}

TEST_CASE("boxes_overlap separating-axis test") {
    dgk::OrientedBox a{{0, 0}, 0.0, 4.0, 2.0};
    dgk::OrientedBox b{{10, 0}, 0.0, 4.0, 2.0};
    CHECK_FALSE(dgk::boxes_overlap(a, b));
    b.center = {3.0, 0.0};
    CHECK(dgk::boxes_overlap(a, b));
    b.center = {4.0, 0.0};  // touching edge to edge
    CHECK(dgk::boxes_overlap(a, b));
    b.center = {4.0 + 1e-9, 0.0};
    CHECK_FALSE(dgk::boxes_overlap(a, b));

    // Rotated square (a diamond) versus a thin bar. Near the bar's corner the
    // axis-aligned projections overlap on both x and y; only the diamond's
    // diagonal axis separates them, which is exactly what SAT must find.
    dgk::OrientedBox diamond{{5.8, 1.3}, kPi / 4, 2.0, 2.0};
    const dgk::OrientedBox bar{{0, 0}, 0.0, 10.0, 0.5};
    CHECK_FALSE(dgk::boxes_overlap(diamond, bar));
    diamond.center = {5.3, 0.6};  // now the bar corner sits inside the diamond
    CHECK(dgk::boxes_overlap(diamond, bar));
    diamond.center = {0, 1.0};  // tip pokes into the bar from above
    CHECK(dgk::boxes_overlap(diamond, bar));
}

TEST_CASE("normalize_scene puts the current target state at the origin") {
    dgk::Scene sc;
    sc.target_history = {make_state(9.0, 5.0, kPi / 2, 0.0, 2.0),
                         make_state(10.0, 5.0, kPi / 2, 0.0, 2.0)};
    sc.future_gt = {{10.0, 6.0}};  // 1 m ahead of the agent (its +x axis points world +y)
    const auto n = dgk::normalize_scene(sc);

    CHECK(n.target_history.back().position.x == Catch::Approx(0.0).margin(1e-12));
    CHECK(n.target_history.back().position.y == Catch::Approx(0.0).margin(1e-12));
    CHECK(n.target_history.back().heading == Catch::Approx(0.0).margin(1e-12));
    CHECK(n.future_gt[0].x == Catch::Approx(1.0).margin(1e-12));
    CHECK(n.future_gt[0].y == Catch::Approx(0.0).margin(1e-12));
    // Velocity (0,2) in world is straight ahead for a pi/2 heading.
    CHECK(n.target_history.back().velocity.x == Catch::Approx(2.0).margin(1e-12));
    CHECK(n.target_history.back().velocity.y == Catch::Approx(0.0).margin(1e-12));
    // Stored frame recovers world coordinates.
    const auto back = dgk::denormalize_trajectory(n.future_gt, n.frame);
    CHECK(back[0].x == Catch::Approx(10.0).margin(1e-12));
    CHECK(back[0].y == Catch::Approx(6.0).margin(1e-12));
}

TEST_CASE("normalize_scene is a no-op for an identity pose") {
    dgk::Scene sc;
    sc.target_history = {make_state(0.0, 0.0, 0.0, 3.0, 0.0)};
    sc.nearby.push_back({{make_state(4.0, 2.0, 0.5, 1.0, 1.0)}, dgk::AgentType::cyclist, 3});
    const auto n = dgk::normalize_scene(sc);
    CHECK(n.nearby[0].states[0].position.x == Catch::Approx(4.0).margin(1e-12));
    CHECK(n.nearby[0].states[0].position.y == Catch::Approx(2.0).margin(1e-12));
    CHECK(n.nearby[0].states[0].heading == Catch::Approx(0.5).margin(1e-12));
    CHECK(n.frame.origin.x == 0.0);
    CHECK(n.frame.heading == 0.0);
}

TEST_CASE("normalize_scene rejects scenes without a valid target state") {
    dgk::Scene sc;
    CHECK_THROWS_WITH(dgk::normalize_scene(sc), "empty target history");
    sc.target_history = {dgk::AgentState::missing()};
    CHECK_THROWS_WITH(dgk::normalize_scene(sc), "empty target history");
}

TEST_CASE("normalize then denormalize is the identity on 100 random scenes") {
    dgk::Rng rng{2024};
    for (int i = 0; i < 100; ++i) {
        auto sc = random_scene(rng);
        const auto n = dgk::normalize_scene(sc);
        const auto back = dgk::denormalize_trajectory(n.future_gt, n.frame);
        REQUIRE(back.size() == sc.future_gt.size());
        for (std::size_t t = 0; t < back.size(); ++t) {
            CHECK(back[t].x == Catch::Approx(sc.future_gt[t].x).margin(1e-9));
            CHECK(back[t].y == Catch::Approx(sc.future_gt[t].y).margin(1e-9));
        }
    }
}

TEST_CASE("normalization composes frames across repeated application") {
    dgk::Rng rng{5};
    auto sc = random_scene(rng);
    const auto once = dgk::normalize_scene(sc);
    const auto twice = dgk::normalize_scene(once);
    // Second normalization is a near-identity, so the composed frame still
    // maps back to the same world coordinates.
    const auto back = dgk::denormalize_trajectory(twice.future_gt, twice.frame);
    for (std::size_t t = 0; t < back.size(); ++t) {
        CHECK(back[t].x == Catch::Approx(sc.future_gt[t].x).margin(1e-9));
        CHECK(back[t].y == Catch::Approx(sc.future_gt[t].y).margin(1e-9));
    }
}

TEST_CASE("vector_count formula") {
    // 3-point polyline + 1-tick history: 2 map segments, 0 transitions,
    // 1 current-state vector.
    CHECK(dgk::vector_count(1, 0, {3}) == 3);
    CHECK(dgk::vector_count(11, 4, {10, 10, 2}) == 5 * 11 + 9 + 9 + 1);
    CHECK(dgk::vector_count(2, 0, {}) == 2);
}

TEST_CASE("vectorize counts and layout for a hand-built scene") {
    dgk::Scene sc;
    // Two-tick target history moving +1 m/tick along x.
    sc.target_history = {make_state(-1.0, 0.0, 0.0, 10.0, 0.0), make_state(0.0, 0.0, 0.0, 10.0, 0.0)};
    dgk::AgentTrack nb;
    nb.states = {make_state(2.0, 1.0, 0.5, 1.0, 0.0), make_state(2.1, 1.0, 0.5, 1.0, 0.0)};
    nb.type = dgk::AgentType::pedestrian;
    nb.id = 42;
    sc.nearby.push_back(nb);
    dgk::Polyline pl;
    pl.points = {{0.0, -2.0}, {5.0, -2.0}, {10.0, -2.0}};
    pl.semantic = dgk::Semantic::lane_boundary;
    pl.id = 1;
    sc.map.push_back(pl);

    const auto vs = dgk::vectorize(sc);
    REQUIRE(vs.size() == dgk::vector_count(2, 1, {3}));  // 2 + 2 + 2 = 6
    REQUIRE(vs.features.cols() == dgk::kFeatureDim);

    // Row 0: target transition (-1,0) -> (0,0).
    CHECK(vs.features(0, 0) == -1.0);
    CHECK(vs.features(0, 2) == 0.0);
    CHECK(vs.features(0, 4) == 10.0);               // end-tick vx
    CHECK(vs.features(0, 8) == 1.0);                // cos(0)
    CHECK(vs.features(0, 10) == 1.0);               // t/(H-1) with H=2, t=1
    CHECK(vs.features(0, 11) == 1.0);               // is_target
    CHECK(vs.features(0, 12) == 0.0);               // not the current-state vector
    CHECK(vs.features(0, 17) == 1.0);               // vehicle one-hot
    CHECK(vs.features(0, 20) == 1.0);               // valid
    // Row 1: target current-state vector (degenerate segment).
    CHECK(vs.features(1, 0) == 0.0);
    CHECK(vs.features(1, 2) == 0.0);
    CHECK(vs.features(1, 12) == 1.0);
    // Row 2: nearby transition, pedestrian one-hot at slot 18.
    CHECK(vs.features(2, 0) == 2.0);
    CHECK(vs.features(2, 2) == Catch::Approx(2.1));
    CHECK(vs.features(2, 11) == 0.0);
    CHECK(vs.features(2, 18) == 1.0);
    // Rows 4, 5: map segments with lane_boundary one-hot at 13+1.
    CHECK(vs.features(4, 0) == 0.0);
    CHECK(vs.features(4, 2) == 5.0);
    CHECK(vs.features(4, 14) == 1.0);
    CHECK(vs.features(5, 0) == 5.0);
    CHECK(vs.features(5, 2) == 10.0);
    // Group ids: target 0, nearby 1, polyline 2.
    CHECK(vs.group_ids == std::vector<std::int32_t>{0, 0, 1, 1, 2, 2});
    CHECK(std::all_of(vs.valid.begin(), vs.valid.end(), [](auto v) { return v == 1; }));
}

TEST_CASE("vectorize zeroes invalid ticks but keeps the row count") {
    dgk::Scene sc;
    sc.target_history = {dgk::AgentState::missing(), make_state(0.0, 0.0, 0.0, 1.0, 0.0)};
    const auto vs = dgk::vectorize(sc);
    REQUIRE(vs.size() == 2);
    CHECK(vs.valid[0] == 0);  // transition from an invalid tick
    CHECK(vs.features.row(0).cwiseAbs().sum() == 0.0);
    CHECK(vs.valid[1] == 1);
}

TEST_CASE("vectorize ordering is independent of input agent order") {
    dgk::Rng rng{77};
    auto sc = random_scene(rng, 4, 3);
    auto shuffled = sc;
    std::swap(shuffled.nearby[0], shuffled.nearby[2]);
    std::swap(shuffled.map, shuffled.map);
    const auto a = dgk::vectorize(sc);
    const auto b = dgk::vectorize(shuffled);
    CHECK(a.features == b.features);
    CHECK(a.group_ids == b.group_ids);
    CHECK(a.valid == b.valid);
}

TEST_CASE("vectorize(normalize) cancels global rigid transforms") {
    dgk::Rng rng{31};
    for (int trial = 0; trial < 20; ++trial) {
        auto sc = random_scene(rng);
        const auto base = dgk::vectorize(dgk::normalize_scene(sc));

        // Apply a random global rotation + translation to every coordinate.
        const dgk::Frame2 g{{rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0)},
                            rng.uniform(-kPi, kPi)};
        auto moved = sc;
        auto move_state = [&](dgk::AgentState& s) {
            if (!s.valid) {
                return;
            }
            s.position = g.to_world(s.position);
            s.heading = dgk::wrap_angle(s.heading + g.heading);
            s.velocity = g.rotate_to_world(s.velocity);
            s.acceleration = g.rotate_to_world(s.acceleration);
        };
        for (auto& s : moved.target_history) {
            move_state(s);
        }
        for (auto& t : moved.nearby) {
            for (auto& s : t.states) {
                move_state(s);
            }
        }
        for (auto& pl : moved.map) {
            for (auto& p : pl.points) {
                p = g.to_world(p);
            }
        }
        for (auto& p : moved.future_gt) {
            p = g.to_world(p);
        }
        const auto after = dgk::vectorize(dgk::normalize_scene(moved));
        REQUIRE(after.features.rows() == base.features.rows());
        CHECK((after.features - base.features).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("scene binary round-trip preserves every field bit-for-bit") {
    dgk::Rng rng{99};
    const auto dir = std::filesystem::temp_directory_path() / "dgk_scene_io_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "scenes.dgk").string();

    std::vector<dgk::Scene> scenes;
    for (int i = 0; i < 5; ++i) {
        scenes.push_back(random_scene(rng, 3 + i % 2, i % 3));
    }
    {
        dgk::SceneWriter w{path};
        for (const auto& s : scenes) {
            w.write(s);
        }
        CHECK(w.count() == scenes.size());
    }
    dgk::SceneReader r{path};
    const auto back = r.read_all();
    REQUIRE(back.size() == scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        CHECK(dgk::encode_scene(back[i]) == dgk::encode_scene(scenes[i]));
        CHECK(back[i].scene_id == scenes[i].scene_id);
        CHECK(back[i].target_history.size() == scenes[i].target_history.size());
        for (std::size_t t = 0; t < back[i].target_history.size(); ++t) {
            CHECK(back[i].target_history[t].position.x == scenes[i].target_history[t].position.x);
            CHECK(back[i].target_history[t].valid == scenes[i].target_history[t].valid);
        }
        CHECK(back[i].drivable == scenes[i].drivable);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("scene reader reports corruption with byte offsets") {
    dgk::Rng rng{13};
    const auto dir = std::filesystem::temp_directory_path() / "dgk_scene_io_err";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "bad.dgk").string();

    const auto payload = dgk::encode_scene(random_scene(rng));

    SECTION("bad magic") {
        auto corrupted = payload;
        corrupted[0] = 'X';
        CHECK_THROWS_AS(dgk::decode_scene(corrupted.data(), corrupted.size(), 0), dgk::IoError);
    }
    SECTION("unsupported version") {
        auto corrupted = payload;
        corrupted[4] = 9;
        CHECK_THROWS_WITH(dgk::decode_scene(corrupted.data(), corrupted.size(), 0),
                          Catch::Matchers::ContainsSubstring("unsupported scene version"));
    }
    SECTION("truncated payload") {
        std::ofstream out{path, std::ios::binary};
        const auto len = static_cast<std::uint32_t>(payload.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(payload.data(), 10);  // cut the record short
        out.close();
        dgk::SceneReader r{path};
        dgk::Scene s;
        try {
            r.next(s);
            FAIL("expected IoError");
        } catch (const dgk::IoError& e) {
            CHECK(e.offset() == 4);  // payload begins after the u32 header
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("truncated"));
        }
    }
    SECTION("truncated header") {
        std::ofstream out{path, std::ios::binary};
        out.write("\x01\x02", 2);
        out.close();
        dgk::SceneReader r{path};
        dgk::Scene s;
        CHECK_THROWS_AS(r.next(s), dgk::IoError);
    }
    SECTION("empty file is a clean end of stream") {
        std::ofstream{path, std::ios::binary}.close();
        dgk::SceneReader r{path};
        dgk::Scene s;
        CHECK_FALSE(r.next(s));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("jsonl debug writer emits one parseable object per scene") {
    dgk::Rng rng{4};
    const auto dir = std::filesystem::temp_directory_path() / "dgk_jsonl";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "scenes.jsonl").string();
    std::vector<dgk::Scene> scenes{random_scene(rng), random_scene(rng)};
    dgk::write_scenes_jsonl(path, scenes);

    std::ifstream in{path};
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("scene_id"));
        CHECK(j.contains("target_history"));
        ++count;
    }
    CHECK(count == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("rng streams are deterministic and serializable") {
    dgk::Rng a{123};
    dgk::Rng b{123};
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    const auto snap = a.state();
    std::vector<std::uint64_t> tail;
    for (int i = 0; i < 10; ++i) {
        tail.push_back(a.next_u64());
    }
    a.set_state(snap);
    for (int i = 0; i < 10; ++i) {
        CHECK(a.next_u64() == tail[static_cast<std::size_t>(i)]);
    }
    // Split streams differ from the parent and from each other.
    auto s0 = dgk::Rng::split(123, 0);
    auto s1 = dgk::Rng::split(123, 1);
    CHECK(s0.next_u64() != s1.next_u64());

    // Uniform stays in [0,1); bounded draws stay in range.
    dgk::Rng c{7};
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const int k = c.uniform_int(-3, 3);
        CHECK(k >= -3);
        CHECK(k <= 3);
        CHECK(std::fabs(c.truncated_normal(0.02)) <= 0.04 + 1e-12);
    }
}

// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scene types, agent-centric normalization, and vectorization into the
// fixed per-segment feature layout consumed by the encoder.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "dgk/common.hpp"
#include "dgk/geometry.hpp"

namespace dgk {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using MatrixD = Matrix<double>;

enum class AgentType : std::uint8_t { vehicle = 0, pedestrian = 1, cyclist = 2 };
inline constexpr int kNumAgentTypes = 3;

enum class Semantic : std::uint8_t {
    lane_center = 0,
    lane_boundary = 1,
    road_edge = 2,
    crosswalk = 3
};
inline constexpr int kNumSemantics = 4;

/// Full kinematic state at one tick. Invalid states carry valid=false and
/// zeroed payloads, never NaN.
struct AgentState {
    Vec2 position{};
    double heading = 0.0;  // (-pi, pi]
    Vec2 velocity{};
    Vec2 acceleration{};
    bool valid = true;

    static AgentState missing() { return AgentState{{}, 0.0, {}, {}, false}; }
};

struct AgentTrack {
    std::vector<AgentState> states;  // H ticks, oldest first
    AgentType type = AgentType::vehicle;
    std::int64_t id = 0;
};

struct Polyline {
    std::vector<Vec2> points;  // >= 2, consecutive points distinct
    Semantic semantic = Semantic::lane_center;
    std::int64_t id = 0;
};

/// The unit of training/eval data. `target_history.back()` is the current
/// state. `frame` maps scene coordinates back to the original world frame;
/// it is identity for raw scenes and set by normalize_scene.
struct Scene {
    std::vector<AgentState> target_history;  // H ticks
    std::vector<AgentTrack> nearby;
    std::vector<Polyline> map;
    std::vector<Vec2> future_gt;  // T ticks; empty at pure inference
    std::vector<std::vector<AgentState>> nearby_future;  // per nearby agent, T ticks (eval only)
    std::vector<Polygon> drivable;  // drivable-area polygons from the generator
    double tick_duration = 0.1;
    std::int64_t scene_id = 0;
    Frame2 frame = Frame2::identity();

    int history_len() const { return static_cast<int>(target_history.size()); }

    const AgentState& current() const {
        DGK_REQUIRE(!target_history.empty(), "empty target history");
        return target_history.back();
    }
};

// Per-vector feature layout, width kFeatureDim. Agent vectors encode one
// tick transition (or the current state); map vectors encode one segment.
//   0..3   x0 y0 x1 y1        segment / transition endpoints
//   4..5   vx vy              end-tick velocity (agents)
//   6..7   ax ay              end-tick acceleration (agents)
//   8..9   cos(h) sin(h)      end-tick heading (agents)
//   10     t / (H-1)          temporal position (agents; 1 for current-state)
//   11     is_target
//   12     is_current_state
//   13..16 semantic one-hot   (map)
//   17..19 agent-type one-hot
//   20     valid
inline constexpr int kFeatureDim = 21;

/// Vectorized scene: one row per segment, in the target agent's frame.
/// Ordering is deterministic: target track, nearby tracks by id, then map
/// polylines by id, each in tick/point order.
struct VectorSet {
    MatrixD features;                    // [n x kFeatureDim]
    std::vector<std::int32_t> group_ids; // length n, source entity index
    std::vector<std::uint8_t> valid;     // length n

    int size() const { return static_cast<int>(features.rows()); }
};

/// n as a pure function of scene shape: every agent track contributes
/// (H-1) transition vectors plus one current-state vector; every polyline
/// with p points contributes p-1 segment vectors.
inline int vector_count(int history_len, int num_agents, const std::vector<int>& polyline_points) {
    int n = (1 + num_agents) * history_len;
    for (int p : polyline_points) {
        n += p - 1;
    }
    return n;
}

/// Footprint extents by agent class, meters.
inline double footprint_length(AgentType t) {
    switch (t) {
        case AgentType::vehicle: return 4.8;
        case AgentType::pedestrian: return 0.8;
        case AgentType::cyclist: return 1.8;
    }
    throw Error{"unknown agent type"};
}

inline double footprint_width(AgentType t) {
    switch (t) {
        case AgentType::vehicle: return 2.0;
        case AgentType::pedestrian: return 0.8;
        case AgentType::cyclist: return 0.6;
    }
    throw Error{"unknown agent type"};
}

inline OrientedBox agent_box(const Vec2& position, double heading, AgentType t) {
    return {position, heading, footprint_length(t), footprint_width(t)};
}

inline AgentState transform_state(const AgentState& s, const Frame2& f) {
    if (!s.valid) {
        return AgentState::missing();
    }
    AgentState out;
    out.position = f.to_local(s.position);
    out.heading = wrap_angle(s.heading - f.heading);
    out.velocity = f.rotate_to_local(s.velocity);
    out.acceleration = f.rotate_to_local(s.acceleration);
    out.valid = true;
    return out;
}

/// Rigid transform of the whole scene into the target agent's current frame:
/// current position at the origin, heading zero. The inverse transform is
/// stored in `frame` (composed with any existing frame), so
/// denormalize_trajectory recovers original coordinates exactly.
inline Scene normalize_scene(const Scene& scene) {
    const AgentState* cur = nullptr;
    for (auto it = scene.target_history.rbegin(); it != scene.target_history.rend(); ++it) {
        if (it->valid) {
            cur = &*it;
            break;
        }
    }
    DGK_REQUIRE(cur != nullptr, "empty target history");

    const Frame2 local{cur->position, cur->heading};
    Scene out;
    out.tick_duration = scene.tick_duration;
    out.scene_id = scene.scene_id;
    // Compose: new frame maps normalized coords to the same world coords.
    out.frame.origin = scene.frame.to_world(local.origin);
    out.frame.heading = wrap_angle(scene.frame.heading + local.heading);

    out.target_history.reserve(scene.target_history.size());
    for (const auto& s : scene.target_history) {
        out.target_history.push_back(transform_state(s, local));
    }
    out.nearby.reserve(scene.nearby.size());
    for (const auto& track : scene.nearby) {
        AgentTrack t;
        t.type = track.type;
        t.id = track.id;
        t.states.reserve(track.states.size());
        for (const auto& s : track.states) {
            t.states.push_back(transform_state(s, local));
        }
        out.nearby.push_back(std::move(t));
    }
    out.map.reserve(scene.map.size());
    for (const auto& pl : scene.map) {
        Polyline q;
        q.semantic = pl.semantic;
        q.id = pl.id;
        q.points.reserve(pl.points.size());
        for (const auto& p : pl.points) {
            q.points.push_back(local.to_local(p));
        }
        out.map.push_back(std::move(q));
    }
    out.future_gt.reserve(scene.future_gt.size());
    for (const auto& p : scene.future_gt) {
        out.future_gt.push_back(local.to_local(p));
    }
    out.nearby_future.reserve(scene.nearby_future.size());
    for (const auto& track : scene.nearby_future) {
        std::vector<AgentState> t;
        t.reserve(track.size());
        for (const auto& s : track) {
            t.push_back(transform_state(s, local));
        }
        out.nearby_future.push_back(std::move(t));
    }
    out.drivable.reserve(scene.drivable.size());
    for (const auto& poly : scene.drivable) {
        Polygon q;
        q.reserve(poly.size());
        for (const auto& p : poly) {
            q.push_back(local.to_local(p));
        }
        out.drivable.push_back(std::move(q));
    }
    return out;
}

/// Exact inverse rigid transform, applied pointwise.
inline std::vector<Vec2> denormalize_trajectory(const std::vector<Vec2>& traj, const Frame2& frame) {
    std::vector<Vec2> out;
    out.reserve(traj.size());
    for (const auto& p : traj) {
        out.push_back(frame.to_world(p));
    }
    return out;
}

namespace detail {

inline void write_agent_vectors(const std::vector<AgentState>& states, AgentType type,
                                bool is_target, int history_len, int group,
                                MatrixD& feat, std::vector<std::int32_t>& groups,
                                std::vector<std::uint8_t>& valid, int& row) {
    const double denom = history_len > 1 ? static_cast<double>(history_len - 1) : 1.0;
    auto fill = [&](int r, const AgentState& a, const AgentState& b, double t_norm,
                    bool current) {
        const bool ok = a.valid && b.valid;
        auto f = feat.row(r);
        f.setZero();
        if (ok) {
            f[0] = a.position.x;
            f[1] = a.position.y;
            f[2] = b.position.x;
            f[3] = b.position.y;
            f[4] = b.velocity.x;
            f[5] = b.velocity.y;
            f[6] = b.acceleration.x;
            f[7] = b.acceleration.y;
            f[8] = std::cos(b.heading);
            f[9] = std::sin(b.heading);
            f[10] = t_norm;
            f[11] = is_target ? 1.0 : 0.0;
            f[12] = current ? 1.0 : 0.0;
            f[17 + static_cast<int>(type)] = 1.0;
            f[20] = 1.0;
        }
        groups[static_cast<std::size_t>(r)] = group;
        valid[static_cast<std::size_t>(r)] = ok ? 1 : 0;
    };

    const int h = static_cast<int>(states.size());
    for (int t = 0; t + 1 < h; ++t) {
        fill(row, states[static_cast<std::size_t>(t)], states[static_cast<std::size_t>(t + 1)],
             static_cast<double>(t + 1) / denom, false);
        ++row;
    }
    if (h > 0) {
        fill(row, states[static_cast<std::size_t>(h - 1)], states[static_cast<std::size_t>(h - 1)],
             1.0, true);
        ++row;
    }
}

}  // namespace detail

/// Break a normalized scene into per-segment feature vectors. Empty nearby
/// and map lists are fine; the target always contributes its own vectors.
inline VectorSet vectorize(const Scene& scene) {
    const int h = scene.history_len();
    DGK_REQUIRE(h >= 1, "empty target history");

    std::vector<const AgentTrack*> nearby;
    nearby.reserve(scene.nearby.size());
    for (const auto& t : scene.nearby) {
        DGK_REQUIRE(static_cast<int>(t.states.size()) == h,
                    "all tracks must share the history length");
        nearby.push_back(&t);
    }
    std::stable_sort(nearby.begin(), nearby.end(),
                     [](const AgentTrack* a, const AgentTrack* b) { return a->id < b->id; });

    std::vector<const Polyline*> map;
    map.reserve(scene.map.size());
    std::vector<int> poly_points;
    for (const auto& pl : scene.map) {
        DGK_REQUIRE(pl.points.size() >= 2, "polyline needs at least 2 points");
        map.push_back(&pl);
    }
    std::stable_sort(map.begin(), map.end(),
                     [](const Polyline* a, const Polyline* b) { return a->id < b->id; });
    for (const auto* pl : map) {
        poly_points.push_back(static_cast<int>(pl->points.size()));
    }

    const int n = vector_count(h, static_cast<int>(nearby.size()), poly_points);
    VectorSet vs;
    vs.features.resize(n, kFeatureDim);
    vs.group_ids.assign(static_cast<std::size_t>(n), 0);
    vs.valid.assign(static_cast<std::size_t>(n), 0);

    int row = 0;
    int group = 0;
    detail::write_agent_vectors(scene.target_history, AgentType::vehicle, true, h, group++,
                                vs.features, vs.group_ids, vs.valid, row);
    for (const auto* track : nearby) {
        detail::write_agent_vectors(track->states, track->type, false, h, group++, vs.features,
                                    vs.group_ids, vs.valid, row);
    }
    for (const auto* pl : map) {
        const auto& pts = pl->points;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            auto f = vs.features.row(row);
            f.setZero();
            f[0] = pts[i].x;
            f[1] = pts[i].y;
            f[2] = pts[i + 1].x;
            f[3] = pts[i + 1].y;
            f[13 + static_cast<int>(pl->semantic)] = 1.0;
            f[20] = 1.0;
            vs.group_ids[static_cast<std::size_t>(row)] = group;
            vs.valid[static_cast<std::size_t>(row)] = 1;
            ++row;
        }
        ++group;
    }
    DGK_REQUIRE(row == n, "vector count mismatch");
    DGK_REQUIRE(vs.features.allFinite(), "non-finite feature");
    return vs;
}

}  // namespace dgk

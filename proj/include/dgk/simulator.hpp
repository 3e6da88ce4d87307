// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic driving world: procedural polyline maps, scripted agents for the
// scenario taxonomy (lane follow, lane change, double-parked bypass, jaywalk,
// oncoming traffic), deterministic dataset generation, and the world stepper
// used by the closed-loop harness.
//
// Ground-truth ego futures are integrated from grid-snapped Verlet actions
// (drift-corrected against the running reconstruction), so every generated
// future is exactly representable in the action vocabulary.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgk/action_codec.hpp"
#include "dgk/rng.hpp"
#include "dgk/scene.hpp"
#include "dgk/scene_io.hpp"

namespace dgk {

enum class MapTemplate : std::uint8_t { straight_road = 0, intersection = 1, two_lane_with_parking = 2 };
enum class Script : std::uint8_t { lane_follow = 0, lane_change = 1, double_park = 2, jaywalk = 3, oncoming = 4 };

inline const char* to_string(MapTemplate t) {
    switch (t) {
        case MapTemplate::straight_road: return "straight_road";
        case MapTemplate::intersection: return "intersection";
        case MapTemplate::two_lane_with_parking: return "two_lane_with_parking";
    }
    throw Error{"unknown map template"};
}

inline const char* to_string(Script s) {
    switch (s) {
        case Script::lane_follow: return "lane_follow";
        case Script::lane_change: return "lane_change";
        case Script::double_park: return "double_park";
        case Script::jaywalk: return "jaywalk";
        case Script::oncoming: return "oncoming";
    }
    throw Error{"unknown script"};
}

inline Script script_from_string(const std::string& s) {
    for (const auto v : {Script::lane_follow, Script::lane_change, Script::double_park,
                         Script::jaywalk, Script::oncoming}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw ConfigError{"unknown script '" + s + "'", "scripts"};
}

inline MapTemplate map_template_from_string(const std::string& s) {
    for (const auto v : {MapTemplate::straight_road, MapTemplate::intersection,
                         MapTemplate::two_lane_with_parking}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw ConfigError{"unknown map template '" + s + "'", "map_template"};
}

/// One world instance: a template, an ego script, and background density.
struct WorldConfig {
    MapTemplate map_template = MapTemplate::straight_road;
    Script ego_script = Script::lane_follow;
    double density = 1.0;  // scales background traffic probabilities
    std::uint64_t seed = 0;
    double tick_duration = 0.1;
    int history_len = 11;
    int horizon = 60;

    void validate() const {
        if (!(density > 0.0)) {
            throw ConfigError{"density must be positive", "world.density"};
        }
        if (!(tick_duration > 0.0)) {
            throw ConfigError{"tick_duration must be positive", "world.tick_duration"};
        }
        if (history_len < 2) {
            throw ConfigError{"history_len must be >= 2", "world.history_len"};
        }
        if (horizon < 1) {
            throw ConfigError{"horizon must be >= 1", "world.horizon"};
        }
    }
};

namespace road {
inline constexpr double kLaneHalf = 1.75;   // lane-center offset from the midline
inline constexpr double kLaneWidth = 3.5;
inline constexpr double kHalfLen = 150.0;   // road half-length, meters
}  // namespace road

/// Builds the polyline map and drivable polygons for a template. The
/// crosswalk segment is emitted only when requested (jaywalk scenes).
inline void build_map(MapTemplate t, std::optional<double> crosswalk_x,
                      std::vector<Polyline>& map, std::vector<Polygon>& drivable) {
    using road::kHalfLen;
    using road::kLaneHalf;
    using road::kLaneWidth;
    map.clear();
    drivable.clear();
    std::int64_t id = 0;
    auto add = [&](Semantic sem, std::vector<Vec2> pts) {
        map.push_back({std::move(pts), sem, ++id});
    };
    switch (t) {
        case MapTemplate::straight_road:
            add(Semantic::lane_center, {{-kHalfLen, -kLaneHalf}, {kHalfLen, -kLaneHalf}});
            add(Semantic::lane_center, {{kHalfLen, kLaneHalf}, {-kHalfLen, kLaneHalf}});
            add(Semantic::lane_boundary, {{-kHalfLen, 0.0}, {kHalfLen, 0.0}});
            add(Semantic::road_edge, {{-kHalfLen, -kLaneWidth}, {kHalfLen, -kLaneWidth}});
            add(Semantic::road_edge, {{-kHalfLen, kLaneWidth}, {kHalfLen, kLaneWidth}});
            drivable.push_back({{-kHalfLen, -kLaneWidth},
                                {kHalfLen, -kLaneWidth},
                                {kHalfLen, kLaneWidth},
                                {-kHalfLen, kLaneWidth}});
            break;
        case MapTemplate::two_lane_with_parking: {
            const double park_edge = -kLaneWidth - 1.75;  // parking strip on the right
            add(Semantic::lane_center, {{-kHalfLen, -kLaneHalf}, {kHalfLen, -kLaneHalf}});
            add(Semantic::lane_center, {{-kHalfLen, kLaneHalf}, {kHalfLen, kLaneHalf}});
            add(Semantic::lane_boundary, {{-kHalfLen, 0.0}, {kHalfLen, 0.0}});
            add(Semantic::lane_boundary, {{-kHalfLen, -kLaneWidth}, {kHalfLen, -kLaneWidth}});
            add(Semantic::road_edge, {{-kHalfLen, park_edge}, {kHalfLen, park_edge}});
            add(Semantic::road_edge, {{-kHalfLen, kLaneWidth}, {kHalfLen, kLaneWidth}});
            drivable.push_back({{-kHalfLen, park_edge},
                                {kHalfLen, park_edge},
                                {kHalfLen, kLaneWidth},
                                {-kHalfLen, kLaneWidth}});
            break;
        }
        case MapTemplate::intersection: {
            const double w = kLaneWidth;
            add(Semantic::lane_center, {{-kHalfLen, -kLaneHalf}, {kHalfLen, -kLaneHalf}});
            add(Semantic::lane_center, {{kHalfLen, kLaneHalf}, {-kHalfLen, kLaneHalf}});
            add(Semantic::lane_center, {{kLaneHalf, -kHalfLen}, {kLaneHalf, kHalfLen}});
            add(Semantic::lane_center, {{-kLaneHalf, kHalfLen}, {-kLaneHalf, -kHalfLen}});
            add(Semantic::lane_boundary, {{-kHalfLen, 0.0}, {-w, 0.0}});
            add(Semantic::lane_boundary, {{w, 0.0}, {kHalfLen, 0.0}});
            add(Semantic::lane_boundary, {{0.0, -kHalfLen}, {0.0, -w}});
            add(Semantic::lane_boundary, {{0.0, w}, {0.0, kHalfLen}});
            add(Semantic::road_edge, {{-kHalfLen, -w}, {-w, -w}});
            add(Semantic::road_edge, {{w, -w}, {kHalfLen, -w}});
            add(Semantic::road_edge, {{-kHalfLen, w}, {-w, w}});
            add(Semantic::road_edge, {{w, w}, {kHalfLen, w}});
            add(Semantic::road_edge, {{-w, -kHalfLen}, {-w, -w}});
            add(Semantic::road_edge, {{-w, w}, {-w, kHalfLen}});
            add(Semantic::road_edge, {{w, -kHalfLen}, {w, -w}});
            add(Semantic::road_edge, {{w, w}, {w, kHalfLen}});
            drivable.push_back({{-kHalfLen, -w},
                                {-w, -w},
                                {-w, -kHalfLen},
                                {w, -kHalfLen},
                                {w, -w},
                                {kHalfLen, -w},
                                {kHalfLen, w},
                                {w, w},
                                {w, kHalfLen},
                                {-w, kHalfLen},
                                {-w, w},
                                {-kHalfLen, w}});
            break;
        }
    }
    if (crosswalk_x) {
        add(Semantic::crosswalk, {{*crosswalk_x, -kLaneWidth}, {*crosswalk_x, kLaneWidth}});
    }
}

namespace detail {

inline double smoothstep(double u) {
    u = std::fmin(1.0, std::fmax(0.0, u));
    return u * u * (3.0 - 2.0 * u);
}

/// Derive full kinematic states from a position sequence. Headings follow
/// the velocity when moving, else hold the previous (or hinted) value.
inline std::vector<AgentState> states_from_positions(const std::vector<Vec2>& pos, double dt,
                                                     double heading_hint) {
    std::vector<AgentState> out(pos.size());
    Vec2 prev_v{};
    double heading = heading_hint;
    for (std::size_t t = 0; t < pos.size(); ++t) {
        const Vec2 v = t == 0 ? (pos.size() > 1 ? (pos[1] - pos[0]) * (1.0 / dt) : Vec2{})
                              : (pos[t] - pos[t - 1]) * (1.0 / dt);
        const Vec2 a = t == 0 ? Vec2{} : (v - prev_v) * (1.0 / dt);
        if (v.norm() > 0.3) {
            heading = std::atan2(v.y, v.x);
        }
        out[t] = {pos[t], wrap_angle(heading), v, t == 0 ? Vec2{} : a, true};
        prev_v = v;
    }
    return out;
}

/// Longitudinal integrator: tracks a commanded target speed with bounded
/// acceleration plus low-pass filtered jitter (keeps the action distribution
/// away from a single token without breaking smoothness).
struct Cruise {
    double x;
    double v;
    double a_limit = 1.4;
    double jitter_amp = 0.5;
    double jitter_state = 0.0;

    double step(double v_target, double dt, Rng& rng) {
        jitter_state = 0.85 * jitter_state + 0.15 * rng.uniform(-jitter_amp, jitter_amp);
        double a = std::clamp((v_target - v) / 1.0, -a_limit, a_limit) + jitter_state;
        a = std::clamp(a, -1.6, 1.6);
        v = std::fmax(0.0, v + a * dt);
        x += v * dt;
        return x;
    }
};

/// Lateral offset with smoothstep transitions between target offsets.
struct LatProfile {
    double current = 0.0;
    double from = 0.0;
    double to = 0.0;
    int start_tick = -1;
    int dur_ticks = 1;

    void begin(double target, int tick, int duration) {
        if (target == to) {
            return;  // already heading there
        }
        from = current;
        to = target;
        start_tick = tick;
        dur_ticks = std::max(1, duration);
    }

    double step(int tick) {
        if (start_tick >= 0) {
            const double u = static_cast<double>(tick - start_tick) / dur_ticks;
            current = from + (to - from) * smoothstep(u);
            if (u >= 1.0) {
                start_tick = -1;
            }
        }
        return current;
    }
};

}  // namespace detail

/// One materialized actor: full per-tick states over the whole episode.
struct Actor {
    std::vector<AgentState> states;
    AgentType type = AgentType::vehicle;
    std::int64_t id = 0;
};

/// A fully simulated episode: map plus materialized tracks, ego first.
struct Episode {
    MapTemplate map_template = MapTemplate::straight_road;
    Script script = Script::lane_follow;
    std::vector<Polyline> map;
    std::vector<Polygon> drivable;
    Actor ego;
    std::vector<Actor> others;
    double tick_duration = 0.1;
};

namespace detail {

/// Straight-line mover along +x or -x (or +-y for cross traffic) with a
/// constant target speed; used for background agents.
inline Actor make_cruiser(AgentType type, std::int64_t id, Vec2 start, Vec2 dir, double speed,
                          int len, double dt, Rng& rng, double jitter = 0.3) {
    std::vector<Vec2> pos(static_cast<std::size_t>(len));
    Cruise c{0.0, speed};
    c.jitter_amp = jitter;
    pos[0] = start;
    for (int t = 1; t < len; ++t) {
        c.step(speed, dt, rng);
        pos[static_cast<std::size_t>(t)] = start + dir * c.x;
    }
    Actor a;
    a.type = type;
    a.id = id;
    a.states = states_from_positions(pos, dt, std::atan2(dir.y, dir.x));
    return a;
}

inline Actor make_stationary(AgentType type, std::int64_t id, Vec2 at, double heading, int len,
                             double dt) {
    std::vector<Vec2> pos(static_cast<std::size_t>(len), at);
    Actor a;
    a.type = type;
    a.id = id;
    a.states = states_from_positions(pos, dt, heading);
    return a;
}

/// Jaywalking pedestrian: waits off-road, then crosses +y at walking speed
/// with short speed ramps.
inline Actor make_pedestrian(std::int64_t id, double cross_x, int start_tick, double walk_speed,
                             int len, double dt) {
    std::vector<Vec2> pos(static_cast<std::size_t>(len));
    const double y0 = -road::kLaneWidth - 2.0;
    double y = y0;
    double v = 0.0;
    for (int t = 0; t < len; ++t) {
        if (t >= start_tick && y < road::kLaneWidth + 2.0) {
            v = std::fmin(walk_speed, v + 0.8 * dt);  // gentle start ramp
        } else if (y >= road::kLaneWidth + 2.0) {
            v = 0.0;
        }
        y += v * dt;
        pos[static_cast<std::size_t>(t)] = {cross_x, y};
    }
    Actor a;
    a.type = AgentType::pedestrian;
    a.id = id;
    a.states = states_from_positions(pos, dt, 1.5707963267948966);
    return a;
}

}  // namespace detail

/// Attempts to materialize one episode; returns nothing when the sampled
/// placement violates the scenario's safety margins (caller resamples).
inline std::optional<Episode> try_materialize(Script script, double density, int episode_len,
                                              double dt, Rng& rng) {
    using road::kLaneHalf;
    Episode ep;
    ep.script = script;
    ep.tick_duration = dt;

    // Choose a template compatible with the script.
    switch (script) {
        case Script::lane_follow:
            ep.map_template = rng.uniform() < 0.6 ? MapTemplate::straight_road
                                                  : MapTemplate::intersection;
            break;
        case Script::oncoming:
            ep.map_template = rng.uniform() < 0.6 ? MapTemplate::straight_road
                                                  : MapTemplate::intersection;
            break;
        case Script::lane_change:
        case Script::double_park:
            ep.map_template = MapTemplate::two_lane_with_parking;
            break;
        case Script::jaywalk:
            ep.map_template = MapTemplate::straight_road;
            break;
    }

    const int len = episode_len;
    const auto flen = static_cast<std::size_t>(len);
    std::int64_t next_id = 100;

    // Ego setup: eastbound, right lane unless the script says otherwise.
    const double x0 = rng.uniform(-70.0, -30.0);
    double v0 = rng.uniform(4.0, 11.0);
    double lane_y = -kLaneHalf;

    std::optional<double> crosswalk_x;
    std::vector<Vec2> ego_pos(flen);

    switch (script) {
        case Script::lane_follow:
        case Script::oncoming: {
            detail::Cruise c{0.0, v0};
            ego_pos[0] = {x0, lane_y};
            for (int t = 1; t < len; ++t) {
                c.step(v0, dt, rng);
                ego_pos[static_cast<std::size_t>(t)] = {x0 + c.x, lane_y};
            }
            break;
        }
        case Script::lane_change: {
            const bool start_right = rng.uniform() < 0.5;
            lane_y = start_right ? -kLaneHalf : kLaneHalf;
            const double target_off = start_right ? road::kLaneWidth : -road::kLaneWidth;
            const int t_lc = rng.uniform_int(15, 50);
            const int dur = static_cast<int>(4.5 / dt);
            detail::Cruise c{0.0, v0};
            detail::LatProfile lat;
            ego_pos[0] = {x0, lane_y};
            for (int t = 1; t < len; ++t) {
                c.step(v0, dt, rng);
                if (t == t_lc) {
                    lat.begin(target_off, t, dur);
                }
                ego_pos[static_cast<std::size_t>(t)] = {x0 + c.x, lane_y + lat.step(t)};
            }
            break;
        }
        case Script::double_park: {
            v0 = rng.uniform(5.0, 8.5);
            const double x_block = x0 + rng.uniform(35.0, 60.0);
            const int dur = static_cast<int>(4.0 / dt);
            detail::Cruise c{0.0, v0};
            detail::LatProfile lat;
            ego_pos[0] = {x0, lane_y};
            int phase = 0;  // 0 approach, 1 alongside, 2 past
            for (int t = 1; t < len; ++t) {
                const double x = x0 + c.x;
                const double d = x_block - x;
                if (phase == 0 && d < 3.0 * c.v + 15.0) {
                    lat.begin(road::kLaneWidth, t, dur);  // swing into the left lane
                    phase = 1;
                }
                if (phase == 1 && x > x_block + 14.0) {
                    lat.begin(0.0, t, dur);  // and back
                    phase = 2;
                }
                const double v_target = std::fabs(d) < 25.0 ? v0 * 0.85 : v0;
                c.step(v_target, dt, rng);
                ego_pos[static_cast<std::size_t>(t)] = {x0 + c.x, lane_y + lat.step(t)};
            }
            // The double-parked blocker, dead ahead in the right lane.
            ep.others.push_back(detail::make_stationary(AgentType::vehicle, next_id++,
                                                        {x_block, -kLaneHalf}, 0.0, len, dt));
            // Safety: fully shifted while alongside the blocker.
            for (int t = 0; t < len; ++t) {
                const auto& p = ego_pos[static_cast<std::size_t>(t)];
                if (std::fabs(p.x - x_block) < 6.0 && std::fabs(p.y - (-kLaneHalf)) < 2.4) {
                    return std::nullopt;
                }
            }
            break;
        }
        case Script::jaywalk: {
            v0 = rng.uniform(4.0, 7.0);
            const double cross_x = x0 + rng.uniform(35.0, 60.0);
            crosswalk_x = cross_x;
            const int ped_start = rng.uniform_int(static_cast<int>(1.0 / dt),
                                                  static_cast<int>(2.5 / dt));
            auto ped = detail::make_pedestrian(next_id++, cross_x, ped_start,
                                               rng.uniform(1.1, 1.4), len, dt);
            detail::Cruise c{0.0, v0};
            c.a_limit = 1.5;
            c.jitter_amp = 0.25;
            ego_pos[0] = {x0, lane_y};
            for (int t = 1; t < len; ++t) {
                const double x = x0 + c.x;
                const double d = cross_x - x;
                const double ped_y = ped.states[static_cast<std::size_t>(t - 1)].position.y;
                const bool ped_active = ped_y > -road::kLaneWidth - 1.9 && ped_y < 1.0;
                double v_target = v0;
                if (ped_active && d > 0.0 && d < 45.0) {
                    v_target = std::fmax(1.0, (d - 6.0) * 0.3);
                }
                c.step(v_target, dt, rng);
                ego_pos[static_cast<std::size_t>(t)] = {x0 + c.x, lane_y};
            }
            // Safety: never close to the pedestrian while it is in our lane.
            for (int t = 0; t < len; ++t) {
                const auto& p = ego_pos[static_cast<std::size_t>(t)];
                const auto& q = ped.states[static_cast<std::size_t>(t)].position;
                if (q.y > -kLaneHalf - 1.1 && q.y < -kLaneHalf + 1.1 && (p - q).norm() < 2.6) {
                    return std::nullopt;
                }
            }
            ep.others.push_back(std::move(ped));
            break;
        }
    }

    build_map(ep.map_template, crosswalk_x, ep.map, ep.drivable);
    ep.ego.states = detail::states_from_positions(ego_pos, dt, 0.0);
    ep.ego.id = 1;
    ep.ego.type = AgentType::vehicle;

    // Background traffic.
    const double p_scale = std::fmin(density, 3.0);
    if (script == Script::oncoming) {
        if (ep.map_template == MapTemplate::straight_road) {
            // Head-on traffic in the opposite lane; a cyclist half the time.
            const bool cyclist = rng.uniform() < 0.5;
            const double speed = cyclist ? rng.uniform(3.0, 6.0) : rng.uniform(4.0, 9.0);
            ep.others.push_back(detail::make_cruiser(
                cyclist ? AgentType::cyclist : AgentType::vehicle, next_id++,
                {x0 + rng.uniform(45.0, 100.0), kLaneHalf}, {-1.0, 0.0}, speed, len, dt, rng));
        } else {
            // Cross traffic, timed to enter the junction after the ego clears it.
            int t_clear = len - 1;
            for (int t = 0; t < len; ++t) {
                if (ego_pos[static_cast<std::size_t>(t)].x > road::kLaneWidth + 1.5) {
                    t_clear = t;
                    break;
                }
            }
            const double speed = rng.uniform(4.0, 8.0);
            const double delay = rng.uniform(1.0, 3.0);
            const double y_start =
                -road::kLaneWidth - 1.5 - speed * (t_clear * dt + delay);
            if (y_start < -road::kHalfLen + 5.0) {
                return std::nullopt;  // would spawn off the map
            }
            ep.others.push_back(detail::make_cruiser(AgentType::vehicle, next_id++,
                                                     {kLaneHalf, y_start}, {0.0, 1.0}, speed, len,
                                                     dt, rng));
        }
    }
    if (script == Script::lane_follow || script == Script::jaywalk ||
        script == Script::lane_change) {
        if (rng.uniform() < 0.6 * p_scale && script != Script::jaywalk) {
            // Lead vehicle in the ego lane, at least as fast, so the gap never shrinks much.
            const double gap = rng.uniform(30.0, 65.0);
            const double speed = v0 * rng.uniform(1.0, 1.15);
            ep.others.push_back(detail::make_cruiser(AgentType::vehicle, next_id++,
                                                     {x0 + gap, lane_y}, {1.0, 0.0}, speed, len, dt,
                                                     rng));
        }
        if (rng.uniform() < 0.5 * p_scale && ep.map_template == MapTemplate::straight_road) {
            ep.others.push_back(detail::make_cruiser(AgentType::vehicle, next_id++,
                                                     {x0 + rng.uniform(50.0, 110.0), kLaneHalf},
                                                     {-1.0, 0.0}, rng.uniform(4.0, 9.0), len, dt,
                                                     rng));
        }
        if (rng.uniform() < 0.35 * p_scale) {
            const double speed = v0 * rng.uniform(0.8, 0.95);
            ep.others.push_back(detail::make_cruiser(AgentType::vehicle, next_id++,
                                                     {x0 - rng.uniform(22.0, 45.0), lane_y},
                                                     {1.0, 0.0}, speed, len, dt, rng));
        }
    }
    if (ep.map_template == MapTemplate::two_lane_with_parking) {
        // Parked cars along the curb strip.
        const int n_parked = rng.uniform_int(1, 3);
        double px = x0 + rng.uniform(5.0, 20.0);
        for (int i = 0; i < n_parked; ++i) {
            ep.others.push_back(detail::make_stationary(AgentType::vehicle, next_id++,
                                                        {px, -road::kLaneWidth - 0.9}, 0.0, len,
                                                        dt));
            px += rng.uniform(9.0, 25.0);
        }
    }

    // Global safety net: no scripted collisions between ego and anyone.
    for (const auto& other : ep.others) {
        for (int t = 0; t < len; ++t) {
            const auto& es = ep.ego.states[static_cast<std::size_t>(t)];
            const auto& os = other.states[static_cast<std::size_t>(t)];
            if (boxes_overlap(agent_box(es.position, es.heading, ep.ego.type),
                              agent_box(os.position, os.heading, other.type))) {
                return std::nullopt;
            }
        }
    }
    return ep;
}

inline constexpr int kPlacementAttempts = 100;

/// Materialize with resampling; throws after the attempt bound.
inline Episode materialize_episode(Script script, double density, int episode_len, double dt,
                                   std::uint64_t seed, std::uint64_t stream) {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        Rng rng = Rng::split(seed, stream * 256 + static_cast<std::uint64_t>(attempt));
        if (auto ep = try_materialize(script, density, episode_len, dt, rng)) {
            return std::move(*ep);
        }
    }
    throw Error{"infeasible script placement"};
}

/// Cut one Scene out of an episode. The ego future is re-integrated from
/// quantized actions so it is exactly grid-representable.
inline Scene scene_from_episode(const Episode& ep, int cut, int history_len, int horizon,
                                const ActionVocabulary& vocab, Rng& rng) {
    const int need = cut + history_len + horizon;
    DGK_REQUIRE(static_cast<int>(ep.ego.states.size()) >= need, "episode too short for the cut");

    Scene sc;
    sc.tick_duration = ep.tick_duration;
    sc.map = ep.map;
    sc.drivable = ep.drivable;

    const auto h0 = static_cast<std::size_t>(cut);
    sc.target_history.assign(ep.ego.states.begin() + static_cast<std::ptrdiff_t>(h0),
                             ep.ego.states.begin() + static_cast<std::ptrdiff_t>(h0) + history_len);

    // Quantize the scripted future onto the action grid and integrate back.
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(horizon) + 2);
    pts.push_back(ep.ego.states[h0 + static_cast<std::size_t>(history_len) - 2].position);
    pts.push_back(ep.ego.states[h0 + static_cast<std::size_t>(history_len) - 1].position);
    for (int t = 0; t < horizon; ++t) {
        pts.push_back(ep.ego.states[h0 + static_cast<std::size_t>(history_len + t)].position);
    }
    EncodeDiagnostics diag;
    const auto tokens = positions_to_actions(pts, vocab, PrefixMode::reconstructed, &diag);
    DGK_REQUIRE(diag.saturated_ticks == 0, "scripted future exceeded the action grid");
    sc.future_gt = actions_to_positions(tokens, pts[0], pts[1], vocab);

    const Vec2 ego_now = sc.target_history.back().position;
    for (const auto& other : ep.others) {
        // Skip far-away actors to keep scenes lean.
        if ((other.states[h0 + static_cast<std::size_t>(history_len) - 1].position - ego_now)
                .norm() > 80.0) {
            continue;
        }
        AgentTrack track;
        track.type = other.type;
        track.id = other.id;
        track.states.assign(
            other.states.begin() + static_cast<std::ptrdiff_t>(h0),
            other.states.begin() + static_cast<std::ptrdiff_t>(h0) + history_len);
        // Occasional missing leading ticks: exercises the validity path.
        if (rng.uniform() < 0.15) {
            const int k = rng.uniform_int(1, std::min(4, history_len - 1));
            for (int i = 0; i < k; ++i) {
                track.states[static_cast<std::size_t>(i)] = AgentState::missing();
            }
        }
        sc.nearby.push_back(std::move(track));

        std::vector<AgentState> fut(
            other.states.begin() + static_cast<std::ptrdiff_t>(h0) + history_len,
            other.states.begin() + static_cast<std::ptrdiff_t>(h0) + history_len + horizon);
        sc.nearby_future.push_back(std::move(fut));
    }
    return sc;
}

/// Generation settings for a whole dataset (scripts rotate per scene).
struct GenConfig {
    std::vector<Script> scripts{Script::lane_follow, Script::lane_change, Script::double_park,
                                Script::jaywalk, Script::oncoming};
    double density = 1.0;
    double tick_duration = 0.1;
    int history_len = 11;
    int horizon = 60;
    ActionVocabulary vocab{};

    void validate() const {
        if (scripts.empty()) {
            throw ConfigError{"scripts must not be empty", "gen.scripts"};
        }
        if (!(density > 0.0)) {
            throw ConfigError{"density must be positive", "gen.density"};
        }
        if (!(tick_duration > 0.0)) {
            throw ConfigError{"tick_duration must be positive", "gen.tick_duration"};
        }
        if (history_len < 2) {
            throw ConfigError{"history_len must be >= 2", "gen.history_len"};
        }
        if (horizon < 1) {
            throw ConfigError{"horizon must be >= 1", "gen.horizon"};
        }
        vocab.validate();
    }
};

struct Dataset {
    std::vector<Scene> train;
    std::vector<Scene> val;
    nlohmann::json manifest;
};

inline constexpr int kCutMax = 40;  // random phase offset, ticks
inline constexpr std::uint64_t kSplitStream = 0x8000000000000000ull;

/// Deterministic synthetic dataset: same (cfg, n, ratio, seed) always yields
/// byte-identical files. Train/val split is a seeded permutation, disjoint
/// by construction.
inline Dataset generate_dataset(const GenConfig& cfg, int n_scenes, double split_ratio,
                                std::uint64_t seed) {
    cfg.validate();
    DGK_REQUIRE(n_scenes >= 1, "n_scenes must be >= 1");
    DGK_REQUIRE(split_ratio >= 0.0 && split_ratio <= 1.0, "split_ratio must be in [0, 1]");

    const int episode_len = cfg.history_len + cfg.horizon + kCutMax;
    const auto n = static_cast<std::size_t>(n_scenes);

    std::vector<Scene> scenes;
    scenes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Script script = cfg.scripts[i % cfg.scripts.size()];
        Scene sc;
        bool made = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !made; ++attempt) {
            Rng rng = Rng::split(seed, i * 256 + static_cast<std::uint64_t>(attempt));
            if (auto ep = try_materialize(script, cfg.density, episode_len, cfg.tick_duration,
                                          rng)) {
                const int cut = rng.uniform_int(0, kCutMax);
                sc = scene_from_episode(*ep, cut, cfg.history_len, cfg.horizon, cfg.vocab, rng);
                made = true;
            }
        }
        if (!made) {
            throw Error{"infeasible script placement for scene " + std::to_string(i)};
        }
        sc.scene_id = static_cast<std::int64_t>(i);
        scenes.push_back(std::move(sc));
    }

    // Seeded permutation split.
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = static_cast<std::uint32_t>(i);
    }
    Rng perm = Rng::split(seed, kSplitStream);
    perm.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * n_scenes));
    std::vector<std::uint8_t> is_train(n, 0);
    for (std::size_t i = 0; i < n_train; ++i) {
        is_train[order[i]] = 1;
    }

    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        (is_train[i] ? ds.train : ds.val).push_back(std::move(scenes[i]));
    }

    nlohmann::json scripts = nlohmann::json::array();
    for (const auto s : cfg.scripts) {
        scripts.push_back(to_string(s));
    }
    ds.manifest = {
        {"schema_version", 1},
        {"seed", seed},
        {"n_scenes", n_scenes},
        {"split_ratio", split_ratio},
        {"train_count", ds.train.size()},
        {"val_count", ds.val.size()},
        {"history_len", cfg.history_len},
        {"horizon", cfg.horizon},
        {"tick_duration", cfg.tick_duration},
        {"density", cfg.density},
        {"scripts", scripts},
        {"vocab", {{"bins_per_axis", cfg.vocab.bins_per_axis}, {"max_accel", cfg.vocab.max_accel}}},
    };
    return ds;
}

inline void write_dataset(const std::string& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    {
        SceneWriter w{(std::filesystem::path(dir) / "train.dgk").string()};
        for (const auto& s : ds.train) {
            w.write(s);
        }
    }
    {
        SceneWriter w{(std::filesystem::path(dir) / "val.dgk").string()};
        for (const auto& s : ds.val) {
            w.write(s);
        }
    }
    std::ofstream mf{(std::filesystem::path(dir) / "manifest.json").string()};
    DGK_REQUIRE(mf.good(), "cannot write manifest.json");
    mf << ds.manifest.dump(2) << '\n';
}

inline Dataset read_dataset(const std::string& dir) {
    Dataset ds;
    std::ifstream mf{(std::filesystem::path(dir) / "manifest.json").string()};
    DGK_REQUIRE(mf.good(), "cannot open manifest.json in " + dir);
    ds.manifest = nlohmann::json::parse(mf);
    ds.train = SceneReader{(std::filesystem::path(dir) / "train.dgk").string()}.read_all();
    ds.val = SceneReader{(std::filesystem::path(dir) / "val.dgk").string()}.read_all();
    if (ds.train.size() != ds.manifest.at("train_count").get<std::size_t>() ||
        ds.val.size() != ds.manifest.at("val_count").get<std::size_t>()) {
        throw Error{"dataset files do not match manifest counts in " + dir};
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Closed-loop world stepping.

struct WorldEvent {
    int tick = 0;
    bool collision = false;
    bool offroad = false;
};

/// Mutable world for closed-loop rollouts. The ego history is scripted for
/// the first history_len ticks; after that the policy drives via step_world.
struct World {
    WorldConfig cfg;
    std::vector<Polyline> map;
    std::vector<Polygon> drivable;
    std::vector<Actor> background;   // materialized for the whole run
    std::vector<AgentState> ego;     // grows by one state per step
    int tick = -1;                   // index of the latest materialized state
    int total_len = 0;
    int collisions = 0;
    int offroad_ticks = 0;
    std::vector<WorldEvent> events;
};

inline constexpr std::uint64_t kWorldStream = 0xC000000000000000ull;

/// Build a world whose backgrounds are materialized for `run_ticks` steps
/// beyond the scripted ego warm-up.
inline World make_world(const WorldConfig& cfg, int run_ticks) {
    cfg.validate();
    DGK_REQUIRE(run_ticks >= 1, "run_ticks must be >= 1");
    const int len = cfg.history_len + run_ticks + 1;

    World w;
    w.cfg = cfg;
    w.total_len = len;
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        Rng rng = Rng::split(cfg.seed, kWorldStream + static_cast<std::uint64_t>(attempt));
        auto ep = try_materialize(cfg.ego_script, cfg.density, len, cfg.tick_duration, rng);
        if (!ep) {
            continue;
        }
        w.map = std::move(ep->map);
        w.drivable = std::move(ep->drivable);
        w.background = std::move(ep->others);
        w.ego.assign(ep->ego.states.begin(), ep->ego.states.begin() + cfg.history_len);
        w.tick = cfg.history_len - 1;
        return w;
    }
    throw Error{"infeasible script placement"};
}

/// Current observation for the planner: the last history_len ego states plus
/// background history, in world coordinates (identity frame).
inline Scene world_scene(const World& w) {
    DGK_REQUIRE(!w.ego.empty(), "world has no ego agent");
    const int h = w.cfg.history_len;
    DGK_REQUIRE(static_cast<int>(w.ego.size()) >= h, "not enough ego history");

    Scene sc;
    sc.tick_duration = w.cfg.tick_duration;
    sc.scene_id = w.tick;
    sc.map = w.map;
    sc.drivable = w.drivable;
    sc.target_history.assign(w.ego.end() - h, w.ego.end());
    const Vec2 ego_now = sc.target_history.back().position;
    for (const auto& b : w.background) {
        const auto bt = static_cast<std::size_t>(w.tick);
        DGK_REQUIRE(bt < b.states.size(), "world stepped past materialized background");
        if ((b.states[bt].position - ego_now).norm() > 80.0) {
            continue;
        }
        AgentTrack track;
        track.type = b.type;
        track.id = b.id;
        track.states.assign(b.states.begin() + (w.tick - h + 1),
                            b.states.begin() + (w.tick + 1));
        sc.nearby.push_back(std::move(track));
    }
    return sc;
}

/// Advance one tick. The ego moves to `ego_next` (omit it for worlds without
/// an ego, which then just advance time). Collision and offroad events are
/// evaluated at the new tick and logged.
inline void step_world(World& w, const std::optional<Vec2>& ego_next = std::nullopt) {
    ++w.tick;
    if (w.ego.empty() && !ego_next) {
        return;  // empty world: time passes, nothing to check
    }
    DGK_REQUIRE(ego_next.has_value(), "ego requires a next position");
    DGK_REQUIRE(w.tick < w.total_len, "world stepped past its materialized span");

    const auto& prev = w.ego.back();
    const double dt = w.cfg.tick_duration;
    AgentState s;
    s.position = *ego_next;
    s.velocity = (s.position - prev.position) * (1.0 / dt);
    s.acceleration = (s.velocity - prev.velocity) * (1.0 / dt);
    s.heading = s.velocity.norm() > 0.3 ? std::atan2(s.velocity.y, s.velocity.x) : prev.heading;
    s.valid = true;
    w.ego.push_back(s);

    WorldEvent ev;
    ev.tick = w.tick;
    const auto ego_box = agent_box(s.position, s.heading, AgentType::vehicle);
    for (const auto& b : w.background) {
        const auto bt = static_cast<std::size_t>(w.tick);
        if (bt >= b.states.size()) {
            continue;
        }
        if (boxes_overlap(ego_box, agent_box(b.states[bt].position, b.states[bt].heading,
                                             b.type))) {
            ev.collision = true;
        }
    }
    bool on_road = false;
    for (const auto& poly : w.drivable) {
        if (point_in_polygon(s.position, poly)) {
            on_road = true;
            break;
        }
    }
    ev.offroad = !on_road;
    if (ev.collision) {
        ++w.collisions;
    }
    if (ev.offroad) {
        ++w.offroad_ticks;
    }
    w.events.push_back(ev);
}

}  // namespace dgk

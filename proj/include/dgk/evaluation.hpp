// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Planning metrics over predicted trajectory sets: geometric distances
// (minADE, minFDE, miss rate), semantic rates (offroad, collision), the
// normalized reporting table, and the perplexity view of a loss. All pure
// functions; evaluate_model glues them to plan().

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dgk/inference.hpp"

namespace dgk {

/// One row of the evaluation table. Distances are meters, rates are in
/// [0, 1]; `t_eval` is the 1-based tick minFDE and the miss rate were
/// measured at; `scenes` is the number of scenes aggregated.
struct MetricReport {
    double min_ade = 0.0;
    double min_fde = 0.0;
    double miss_rate = 0.0;
    double offroad_rate = 0.0;
    double collision_rate = 0.0;
    int t_eval = 0;
    int horizon = 0;
    int scenes = 0;
};

/// Min over modes of the mean-over-ticks Euclidean distance to the ground
/// truth.
inline double min_ade(const std::vector<Trajectory>& modes, const Trajectory& gt) {
    DGK_REQUIRE(!modes.empty(), "min_ade: no modes");
    DGK_REQUIRE(!gt.empty(), "min_ade: empty ground truth");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : modes) {
        DGK_REQUIRE(m.size() == gt.size(), "min_ade: mode/ground-truth length mismatch");
        double sum = 0.0;
        for (std::size_t t = 0; t < gt.size(); ++t) {
            sum += (m[t] - gt[t]).norm();
        }
        best = std::min(best, sum / static_cast<double>(gt.size()));
    }
    return best;
}

/// Min over modes of the displacement at tick `t_eval` (1-based; the full
/// horizon is t_eval == gt.size()).
inline double min_fde(const std::vector<Trajectory>& modes, const Trajectory& gt, int t_eval) {
    DGK_REQUIRE(!modes.empty(), "min_fde: no modes");
    DGK_REQUIRE(t_eval >= 1 && t_eval <= static_cast<int>(gt.size()),
                "min_fde: t_eval outside [1, T]");
    const auto idx = static_cast<std::size_t>(t_eval - 1);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : modes) {
        DGK_REQUIRE(m.size() == gt.size(), "min_fde: mode/ground-truth length mismatch");
        best = std::min(best, (m[idx] - gt[idx]).norm());
    }
    return best;
}

/// Fraction of scenes whose minFDE at `t_eval` exceeds the threshold
/// (default 2 m).
inline double miss_rate(const std::vector<std::vector<Trajectory>>& modes_batch,
                        const std::vector<Trajectory>& gt_batch, int t_eval,
                        double threshold = 2.0) {
    DGK_REQUIRE(threshold > 0.0, "miss_rate: threshold must be positive");
    DGK_REQUIRE(modes_batch.size() == gt_batch.size(), "miss_rate: batch size mismatch");
    DGK_REQUIRE(!modes_batch.empty(), "miss_rate: empty batch");
    int misses = 0;
    for (std::size_t i = 0; i < modes_batch.size(); ++i) {
        if (min_fde(modes_batch[i], gt_batch[i], t_eval) > threshold) {
            ++misses;
        }
    }
    return static_cast<double>(misses) / static_cast<double>(modes_batch.size());
}

/// Fraction of trajectories with at least one point outside the drivable
/// union. Points exactly on a polygon edge count as inside (boundary rule
/// of point_in_polygon), so lane-edge trajectories are stable across
/// platforms.
inline double offroad_rate(const std::vector<Trajectory>& trajectories,
                           const std::vector<Polygon>& drivable) {
    if (drivable.empty()) {
        throw Error{"offroad_rate: no drivable-area polygons"};
    }
    DGK_REQUIRE(!trajectories.empty(), "offroad_rate: no trajectories");
    int off = 0;
    for (const auto& t : trajectories) {
        for (const auto& p : t) {
            bool inside = false;
            for (const auto& poly : drivable) {
                if (point_in_polygon(p, poly)) {
                    inside = true;
                    break;
                }
            }
            if (!inside) {
                ++off;
                break;
            }
        }
    }
    return static_cast<double>(off) / static_cast<double>(trajectories.size());
}

/// Fraction of trajectories with at least one tick of oriented-footprint
/// overlap against any agent track (separating-axis test). The ego box
/// heading at tick t comes from the step into t; tick 0 borrows the first
/// step's direction, and near-zero steps keep the previous heading.
inline double collision_rate(const std::vector<Trajectory>& trajectories,
                             const std::vector<AgentTrack>& others,
                             AgentType ego_type = AgentType::vehicle) {
    DGK_REQUIRE(!trajectories.empty(), "collision_rate: no trajectories");
    int hits = 0;
    for (const auto& traj : trajectories) {
        double heading = 0.0;
        if (traj.size() >= 2) {
            const Vec2 first = traj[1] - traj[0];
            if (first.norm() > 1e-9) {
                heading = std::atan2(first.y, first.x);
            }
        }
        bool collided = false;
        for (std::size_t t = 0; t < traj.size() && !collided; ++t) {
            if (t >= 1) {
                const Vec2 step = traj[t] - traj[t - 1];
                if (step.norm() > 1e-9) {
                    heading = std::atan2(step.y, step.x);
                }
            }
            const OrientedBox ego = agent_box(traj[t], heading, ego_type);
            for (const auto& o : others) {
                if (t >= o.states.size() || !o.states[t].valid) {
                    continue;
                }
                if (boxes_overlap(ego, agent_box(o.states[t].position, o.states[t].heading,
                                                 o.type))) {
                    collided = true;
                    break;
                }
            }
        }
        if (collided) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(trajectories.size());
}

/// Elementwise report / baseline. Feeding the baseline itself yields a row
/// of exact 1.0. Every baseline metric must be strictly positive.
inline std::vector<MetricReport> normalize_metrics(const std::vector<MetricReport>& reports,
                                                   const MetricReport& baseline) {
    const auto check = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw Error{std::string{"normalize_metrics: baseline "} + name +
                        " must be positive"};
        }
    };
    check(baseline.min_ade, "min_ade");
    check(baseline.min_fde, "min_fde");
    check(baseline.miss_rate, "miss_rate");
    check(baseline.offroad_rate, "offroad_rate");
    check(baseline.collision_rate, "collision_rate");

    std::vector<MetricReport> out = reports;
    for (auto& r : out) {
        r.min_ade /= baseline.min_ade;
        r.min_fde /= baseline.min_fde;
        r.miss_rate /= baseline.miss_rate;
        r.offroad_rate /= baseline.offroad_rate;
        r.collision_rate /= baseline.collision_rate;
    }
    return out;
}

/// The exponentiated-entropy view of a cross-entropy loss in nats.
inline double perplexity(double loss) {
    DGK_REQUIRE(loss >= 0.0, "perplexity: loss must be nonnegative");
    return std::exp(loss);
}

// ---------------------------------------------------------------------------
// Model-level evaluation

struct EvalConfig {
    PlanConfig plan;              // K=6 modes from 64 samples by default
    double miss_threshold = 2.0;  // meters of FDE
    int t_eval = 0;               // 1-based tick; 0 means the full horizon
    bool all_samples = false;     // offroad/collision over samples, not modes
};

/// Plans every scene and aggregates the metric means. Offroad and collision
/// run over the K modes by default; `all_samples` switches them to the raw
/// sample set. Per-scene plan seeds are split from the config seed.
template <class S>
MetricReport evaluate_model(const BehaviorModel<S>& model, const std::vector<Scene>& scenes,
                            const EvalConfig& cfg = {}) {
    DGK_REQUIRE(!scenes.empty(), "evaluate_model: no scenes");
    const int horizon = model.config().decoder.horizon;
    const int t_eval = cfg.t_eval == 0 ? horizon : cfg.t_eval;
    DGK_REQUIRE(t_eval >= 1 && t_eval <= horizon, "evaluate_model: t_eval outside [1, horizon]");

    MetricReport rep;
    rep.t_eval = t_eval;
    rep.horizon = horizon;
    rep.scenes = static_cast<int>(scenes.size());

    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const Scene& sc = scenes[i];
        DGK_REQUIRE(static_cast<int>(sc.future_gt.size()) == horizon,
                    "evaluate_model: scene ground truth does not span the horizon");
        PlanConfig pc = cfg.plan;
        pc.seed = Rng::split(cfg.plan.seed, static_cast<std::uint64_t>(i)).next_u64();
        const TrajectorySet ts = plan(model, sc, pc);

        rep.min_ade += min_ade(ts.modes, sc.future_gt);
        const double fde = min_fde(ts.modes, sc.future_gt, t_eval);
        rep.min_fde += fde;
        if (fde > cfg.miss_threshold) {
            rep.miss_rate += 1.0;
        }

        const auto& set = cfg.all_samples ? ts.samples : ts.modes;
        rep.offroad_rate += offroad_rate(set, sc.drivable);

        std::vector<AgentTrack> others;
        DGK_REQUIRE(sc.nearby_future.size() <= sc.nearby.size(),
                    "evaluate_model: nearby_future does not match nearby tracks");
        for (std::size_t a = 0; a < sc.nearby_future.size(); ++a) {
            AgentTrack tr;
            tr.type = sc.nearby[a].type;
            tr.id = sc.nearby[a].id;
            tr.states = sc.nearby_future[a];
            others.push_back(std::move(tr));
        }
        rep.collision_rate += collision_rate(set, others);
    }

    const auto n = static_cast<double>(scenes.size());
    rep.min_ade /= n;
    rep.min_fde /= n;
    rep.miss_rate /= n;
    rep.offroad_rate /= n;
    rep.collision_rate /= n;
    return rep;
}

}  // namespace dgk

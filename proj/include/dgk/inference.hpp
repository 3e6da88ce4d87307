// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rollout-time behavior: batched autoregressive sampling of future
// trajectories, K-Means reduction to a fixed set of modes with cluster-mass
// probabilities, and the closed-loop runner that drives the simulator ego
// off the planner.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "dgk/model.hpp"
#include "dgk/simulator.hpp"

namespace dgk {

using Trajectory = std::vector<Vec2>;

/// Output of plan(): raw samples plus their K-Means reduction. Probabilities
/// are cluster member fractions, nonnegative and summing to 1; compounded
/// per-step chain probabilities are deliberately not used as mode scores
/// (they are too noisy to rank modes).
struct TrajectorySet {
    std::vector<Trajectory> samples;
    std::vector<Trajectory> modes;
    std::vector<double> mode_probs;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Sampling

/// Draws an index from softmax(logits / temperature). Temperature 0 is the
/// argmax (ties to the lowest index) and consumes no randomness; otherwise
/// one uniform draw maps through the inverse CDF, computed in double with
/// the usual max shift.
inline int sample_categorical(const std::vector<double>& logits, double temperature, Rng& rng) {
    DGK_REQUIRE(!logits.empty(), "sample_categorical: empty logits");
    DGK_REQUIRE(temperature >= 0.0, "sample_categorical: negative temperature");
    const int n = static_cast<int>(logits.size());
    if (temperature == 0.0) {
        int best = 0;
        for (int i = 1; i < n; ++i) {
            if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)]) {
                best = i;
            }
        }
        return best;
    }
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        DGK_REQUIRE(std::isfinite(v), "sample_categorical: non-finite logit");
        hi = std::max(hi, v);
    }
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - hi) / temperature);
        z += p[i];
    }
    const double u = rng.uniform() * z;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += p[static_cast<std::size_t>(i)];
        if (u < acc) {
            return i;
        }
    }
    return n - 1;  // u landed on the rounding slack past the last cumsum
}

/// S independent rollouts of the autoregressive decoder over one scene,
/// batched across samples. Returns agent-frame trajectories (s_1 .. s_T
/// in the normalized frame of `scene`); plan() denormalizes after
/// clustering. Each sample owns an RNG split from `seed`, so results do
/// not depend on batching or evaluation order. Deterministic given seed.
template <class S>
std::vector<Trajectory> sample_rollout(const BehaviorModel<S>& model, const Scene& scene,
                                       int n_samples, double temperature, std::uint64_t seed) {
    DGK_REQUIRE(n_samples >= 1, "sample_rollout: need at least one sample");
    DGK_REQUIRE(temperature >= 0.0, "sample_rollout: negative temperature");
    const Scene norm = normalize_scene(scene);
    const auto h = norm.target_history.size();
    DGK_REQUIRE(h >= 2, "sample_rollout: need at least two history ticks");
    DGK_REQUIRE(norm.target_history[h - 1].valid && norm.target_history[h - 2].valid,
                "sample_rollout: the last two history ticks must be valid");

    const auto& vocab = model.config().vocab;
    const int horizon = model.config().decoder.horizon;
    const auto& p = model.params();
    const VectorSet vs = vectorize(norm);
    const SceneEmbedding<S> mem = model.encoder().encode(p, vs, nullptr);

    BatchedDecodeState<S> st;
    model.decoder().begin_batch(p, mem, n_samples, st);

    const auto b = static_cast<std::size_t>(n_samples);
    std::vector<Rng> rngs;
    rngs.reserve(b);
    for (std::size_t s = 0; s < b; ++s) {
        rngs.push_back(Rng::split(seed, static_cast<std::uint64_t>(s)));
    }

    std::vector<Vec2> prev(b, norm.target_history[h - 2].position);
    std::vector<Vec2> cur(b, norm.target_history[h - 1].position);
    std::vector<Trajectory> out(b);
    for (auto& t : out) {
        t.reserve(static_cast<std::size_t>(horizon));
    }

    Matrix<S> rows(n_samples, 2);
    auto feed = [&](const std::vector<Vec2>& pos) {
        for (int i = 0; i < n_samples; ++i) {
            rows(i, 0) = static_cast<S>(pos[static_cast<std::size_t>(i)].x);
            rows(i, 1) = static_cast<S>(pos[static_cast<std::size_t>(i)].y);
        }
        return model.decoder().step_batch(p, rows, st);
    };

    feed(prev);  // seed slot; its logits predict nothing
    std::vector<double> logits(static_cast<std::size_t>(vocab.size()));
    for (int t = 0; t < horizon; ++t) {
        const Matrix<S> l = feed(cur);
        for (std::size_t s = 0; s < b; ++s) {
            for (int j = 0; j < vocab.size(); ++j) {
                logits[static_cast<std::size_t>(j)] =
                    static_cast<double>(l(static_cast<Eigen::Index>(s), j));
            }
            const int token = sample_categorical(logits, temperature, rngs[s]);
            const Vec2 next = cur[s] + (cur[s] - prev[s]) + vocab.action(token);
            out[s].push_back(next);
            prev[s] = cur[s];
            cur[s] = next;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// K-Means mode reduction

namespace detail {

inline double sq_dist(const MatrixD& x, Eigen::Index a, const MatrixD& c, Eigen::Index b) {
    return (x.row(a) - c.row(b)).squaredNorm();
}

}  // namespace detail

/// K-Means over flattened trajectories (2T-dimensional points, full
/// trajectories rather than endpoints): k-means++ seeding, Lloyd iterations
/// with a fixed cap, deterministic given seed. Mode k is the centroid of
/// cluster k; its probability is the cluster's member fraction. Modes are
/// returned sorted by probability, descending.
///
/// Fewer than K distinct samples collapses the clustering to the distinct
/// points; the output is then padded back to K entries by repeating the
/// top mode with probability zero, so the shape contract holds.
inline std::pair<std::vector<Trajectory>, std::vector<double>> kmeans_modes(
    const std::vector<Trajectory>& samples, int k, std::uint64_t seed) {
    const int n = static_cast<int>(samples.size());
    DGK_REQUIRE(k >= 1, "kmeans_modes: need at least one cluster");
    DGK_REQUIRE(n >= k, "kmeans_modes: fewer samples than clusters");
    const auto horizon = samples.front().size();
    DGK_REQUIRE(horizon >= 1, "kmeans_modes: empty trajectories");
    for (const auto& t : samples) {
        DGK_REQUIRE(t.size() == horizon, "kmeans_modes: ragged trajectory lengths");
    }

    MatrixD x(n, static_cast<Eigen::Index>(2 * horizon));
    for (int i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < horizon; ++t) {
            x(i, static_cast<Eigen::Index>(2 * t)) = samples[static_cast<std::size_t>(i)][t].x;
            x(i, static_cast<Eigen::Index>(2 * t + 1)) = samples[static_cast<std::size_t>(i)][t].y;
        }
    }

    // Exact-duplicate collapse: cluster over the distinct rows only.
    std::vector<int> distinct;
    for (int i = 0; i < n; ++i) {
        bool seen = false;
        for (int j : distinct) {
            if (x.row(i) == x.row(j)) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            distinct.push_back(i);
        }
    }
    const int kk = std::min<int>(k, static_cast<int>(distinct.size()));

    Rng rng = Rng::split(seed, 0);

    // k-means++ seeding over the distinct rows.
    MatrixD centroids(kk, x.cols());
    centroids.row(0) = x.row(distinct[static_cast<std::size_t>(
        rng.below(static_cast<std::uint64_t>(distinct.size())))]);
    std::vector<double> d2(distinct.size());
    for (int c = 1; c < kk; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < c; ++j) {
                best = std::min(best, detail::sq_dist(x, distinct[i], centroids, j));
            }
            d2[i] = best;
            total += best;
        }
        const double u = rng.uniform() * total;
        double acc = 0.0;
        int pick = -1;
        for (std::size_t i = 0; i < distinct.size(); ++i) {
            acc += d2[i];
            if (u < acc) {
                pick = static_cast<int>(i);
                break;
            }
        }
        if (pick < 0) {  // rounding slack: take the last row with mass
            for (std::size_t i = distinct.size(); i-- > 0;) {
                if (d2[i] > 0.0) {
                    pick = static_cast<int>(i);
                    break;
                }
            }
        }
        centroids.row(c) = x.row(distinct[static_cast<std::size_t>(pick)]);
    }

    // Lloyd iterations over all rows, assignment ties to the lowest cluster.
    constexpr int kMaxIter = 50;
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < kMaxIter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = detail::sq_dist(x, i, centroids, 0);
            for (int c = 1; c < kk; ++c) {
                const double d = detail::sq_dist(x, i, centroids, c);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) {
            break;
        }
        MatrixD sums = MatrixD::Zero(kk, x.cols());
        std::vector<int> counts(static_cast<std::size_t>(kk), 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < kk; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                // Reseed an empty cluster at the point farthest from its
                // assigned centroid (ties to the lowest index).
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d =
                        detail::sq_dist(x, i, centroids, assign[static_cast<std::size_t>(i)]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                centroids.row(c) = x.row(far);
                assign[static_cast<std::size_t>(far)] = c;
            } else {
                centroids.row(c) =
                    sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
    }

    std::vector<int> counts(static_cast<std::size_t>(kk), 0);
    for (int a : assign) {
        ++counts[static_cast<std::size_t>(a)];
    }
    std::vector<int> order(static_cast<std::size_t>(kk));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });

    std::vector<Trajectory> modes;
    std::vector<double> probs;
    modes.reserve(static_cast<std::size_t>(k));
    probs.reserve(static_cast<std::size_t>(k));
    for (int c : order) {
        Trajectory m(horizon);
        for (std::size_t t = 0; t < horizon; ++t) {
            m[t] = {centroids(c, static_cast<Eigen::Index>(2 * t)),
                    centroids(c, static_cast<Eigen::Index>(2 * t + 1))};
        }
        modes.push_back(std::move(m));
        probs.push_back(static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                        static_cast<double>(n));
    }
    while (static_cast<int>(modes.size()) < k) {
        modes.push_back(modes.front());
        probs.push_back(0.0);
    }
    return {std::move(modes), std::move(probs)};
}

// ---------------------------------------------------------------------------
// Planning

struct PlanConfig {
    int samples = 64;
    int modes = 6;
    double temperature = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (samples < 1) {
            throw ConfigError{"samples must be >= 1", "plan.samples"};
        }
        if (modes < 1 || modes > samples) {
            throw ConfigError{"modes must be in [1, samples]", "plan.modes"};
        }
        if (!(temperature >= 0.0)) {
            throw ConfigError{"temperature must be >= 0", "plan.temperature"};
        }
    }
};

inline constexpr std::uint64_t kClusterStream = 0x636c757374657231ull;

/// Oversample-then-cluster planning: sample_rollout followed by
/// kmeans_modes, with samples and modes mapped back into the original
/// (world) frame of `scene`. Clustering itself runs in the agent frame,
/// before denormalization.
template <class S>
TrajectorySet plan(const BehaviorModel<S>& model, const Scene& scene, const PlanConfig& cfg = {}) {
    cfg.validate();
    auto local = sample_rollout(model, scene, cfg.samples, cfg.temperature, cfg.seed);
    auto [modes, probs] =
        kmeans_modes(local, cfg.modes, Rng::split(cfg.seed, kClusterStream).next_u64());

    const Frame2 frame = normalize_scene(scene).frame;
    auto to_world = [&frame](std::vector<Trajectory>& ts) {
        for (auto& t : ts) {
            for (auto& pt : t) {
                pt = frame.to_world(pt);
            }
        }
    };
    to_world(local);
    to_world(modes);

    TrajectorySet out;
    out.samples = std::move(local);
    out.modes = std::move(modes);
    out.mode_probs = std::move(probs);
    out.temperature = cfg.temperature;
    out.seed = cfg.seed;
    return out;
}

// ---------------------------------------------------------------------------
// Closed loop

/// One entry per replan attempt: the tick it happened at, the plan that came
/// back (the held previous plan when the planner failed), and the failure
/// flag.
struct PlanRecord {
    int tick = 0;
    TrajectorySet plan;
    bool planner_failed = false;
};

struct ClosedLoopConfig {
    int replan_period = 10;  // ticks executed per plan; == horizon is open loop
    PlanConfig plan;
};

struct ClosedLoopLog {
    std::vector<PlanRecord> plans;
    int ticks = 0;
};

/// Drives the simulator ego: every replan_period ticks it plans on the
/// current observation and then executes the top-probability mode by exact
/// teleport along the trajectory. A planner failure holds the previous
/// trajectory (or the current position when there is none yet) and flags
/// the record. Per-replan seeds are split from the master seed, so a run
/// is deterministic end to end.
template <class S>
class ClosedLoopRunner {
public:
    ClosedLoopRunner(const BehaviorModel<S>& model, ClosedLoopConfig cfg)
        : model_(model), cfg_(std::move(cfg)) {
        cfg_.plan.validate();
        const int horizon = model_.config().decoder.horizon;
        if (cfg_.replan_period < 1 || cfg_.replan_period > horizon) {
            throw ConfigError{"replan_period must be in [1, horizon]", "closed_loop.replan_period"};
        }
    }

    /// Advances the world by exactly one tick.
    void step(World& world) {
        if (since_plan_ == cfg_.replan_period || log_.plans.empty()) {
            replan(world);
            since_plan_ = 0;
        }
        Vec2 next;
        if (cursor_ < current_.size()) {
            next = current_[cursor_++];
        } else if (!current_.empty()) {
            next = current_.back();  // exhausted held plan: stand still
        } else {
            next = world.ego.back().position;  // never had a plan
        }
        step_world(world, next);
        ++since_plan_;
        ++log_.ticks;
    }

    void run(World& world, int ticks) {
        DGK_REQUIRE(ticks >= 1, "run needs at least one tick");
        for (int i = 0; i < ticks; ++i) {
            step(world);
        }
    }

    const ClosedLoopLog& log() const noexcept { return log_; }

private:
    void replan(World& world) {
        PlanRecord rec;
        rec.tick = world.tick;
        PlanConfig pc = cfg_.plan;
        pc.seed = Rng::split(cfg_.plan.seed, static_cast<std::uint64_t>(log_.plans.size()))
                      .next_u64();
        try {
            rec.plan = plan(model_, world_scene(world), pc);
            int best = 0;
            for (std::size_t i = 1; i < rec.plan.mode_probs.size(); ++i) {
                if (rec.plan.mode_probs[i] > rec.plan.mode_probs[static_cast<std::size_t>(best)]) {
                    best = static_cast<int>(i);
                }
            }
            current_ = rec.plan.modes[static_cast<std::size_t>(best)];
            cursor_ = 0;
        } catch (const Error&) {
            rec.plan = last_good_;
            rec.planner_failed = true;
            // current_ and cursor_ stay as they are: hold the last trajectory.
        }
        if (!rec.planner_failed) {
            last_good_ = rec.plan;
        }
        log_.plans.push_back(std::move(rec));
    }

    const BehaviorModel<S>& model_;
    ClosedLoopConfig cfg_;
    ClosedLoopLog log_;
    TrajectorySet last_good_;
    Trajectory current_;
    std::size_t cursor_ = 0;
    int since_plan_ = 0;
};

}  // namespace dgk

// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Teacher-forcing training: token cross-entropy, Adam with decoupled weight
// decay, cosine learning-rate decay, deterministic shuffling, divergence
// detection, and finite-difference gradient checking. All loss arithmetic
// runs in double regardless of the parameter scalar so that curves from
// float and double models are comparable.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgk/model.hpp"

namespace dgk {

struct TrainConfig {
    int batch_size = 64;
    double max_lr = 1e-3;
    double min_lr = 0.0;          // 0 means max_lr / 10
    std::int64_t total_steps = 0; // 0 means epochs * steps-per-epoch
    int epochs = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;   // decoupled, matrices only
    double clip_norm = 1.0;       // global gradient norm; <= 0 disables
    std::uint64_t seed = 0;
    std::int64_t val_interval = 50;

    void validate() const {
        if (batch_size < 1) {
            throw ConfigError{"batch_size must be at least 1", "train.batch_size"};
        }
        if (!(max_lr > 0.0)) {
            throw ConfigError{"max_lr must be positive", "train.max_lr"};
        }
        if (min_lr < 0.0 || min_lr > max_lr) {
            throw ConfigError{"min_lr must be in (0, max_lr] or 0 to derive it",
                              "train.min_lr"};
        }
        if (total_steps < 0) {
            throw ConfigError{"total_steps must be nonnegative", "train.total_steps"};
        }
        if (epochs < 1) {
            throw ConfigError{"epochs must be at least 1", "train.epochs"};
        }
        if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
            throw ConfigError{"Adam betas must be in [0, 1)", "train.adam_beta1"};
        }
        if (!(adam_eps > 0.0)) {
            throw ConfigError{"adam_eps must be positive", "train.adam_eps"};
        }
        if (weight_decay < 0.0) {
            throw ConfigError{"weight_decay must be nonnegative", "train.weight_decay"};
        }
        if (val_interval < 1) {
            throw ConfigError{"val_interval must be at least 1", "train.val_interval"};
        }
    }

    double effective_min_lr() const { return min_lr > 0.0 ? min_lr : max_lr / 10.0; }
};

namespace detail {

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},     {"max_lr", c.max_lr},
            {"min_lr", c.min_lr},             {"total_steps", c.total_steps},
            {"epochs", c.epochs},             {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},     {"adam_eps", c.adam_eps},
            {"weight_decay", c.weight_decay}, {"clip_norm", c.clip_norm},
            {"seed", c.seed},                 {"val_interval", c.val_interval}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss

struct CeLoss {
    double mean = 0.0;             // over all target steps
    std::vector<double> per_step;  // diagnostics
};

/// Mean cross-entropy of `logits` [T x V] against `targets` (length T),
/// log-sum-exp stabilized and summed in double.
template <class S>
CeLoss ce_loss(const Matrix<S>& logits, const TokenSequence& targets) {
    DGK_REQUIRE(static_cast<std::size_t>(logits.rows()) == targets.tokens.size(),
                "logits and targets disagree on the step count");
    CeLoss out;
    out.per_step.reserve(targets.tokens.size());
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        const auto target = targets.tokens[static_cast<std::size_t>(t)];
        DGK_REQUIRE(target >= 0 && target < logits.cols(), "target token out of vocabulary");
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            m = std::max(m, static_cast<double>(logits(t, j)));
        }
        double z = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            z += std::exp(static_cast<double>(logits(t, j)) - m);
        }
        const double step = m + std::log(z) - static_cast<double>(logits(t, target));
        out.per_step.push_back(step);
        out.mean += step;
    }
    out.mean /= static_cast<double>(out.per_step.size());
    return out;
}

/// Gradient of `scale * ce_loss(...).mean` with respect to the logits.
template <class S>
Matrix<S> ce_loss_backward(const Matrix<S>& logits, const TokenSequence& targets,
                           double scale = 1.0) {
    DGK_REQUIRE(static_cast<std::size_t>(logits.rows()) == targets.tokens.size(),
                "logits and targets disagree on the step count");
    const double w = scale / static_cast<double>(logits.rows());
    Matrix<S> d(logits.rows(), logits.cols());
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            m = std::max(m, static_cast<double>(logits(t, j)));
        }
        double z = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            z += std::exp(static_cast<double>(logits(t, j)) - m);
        }
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double p = std::exp(static_cast<double>(logits(t, j)) - m) / z;
            d(t, j) = static_cast<S>(p * w);
        }
        d(t, targets.tokens[static_cast<std::size_t>(t)]) -= static_cast<S>(w);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Learning-rate schedule

/// Cosine decay from max_lr (step 0) to min_lr (step total_steps).
inline double lr_schedule(std::int64_t step, std::int64_t total_steps, double max_lr,
                          double min_lr) {
    if (step < 0 || step > total_steps) {
        throw Error{"lr_schedule: step " + std::to_string(step) + " outside [0, " +
                    std::to_string(total_steps) + "]"};
    }
    // The endpoints are contractual (lr(0) == max_lr, lr(total) == min_lr),
    // so return them directly rather than through the rounded cosine form.
    if (step == 0) {
        return max_lr;
    }
    if (step == total_steps) {
        return min_lr;
    }
    const double phase = static_cast<double>(step) / static_cast<double>(total_steps);
    return min_lr + 0.5 * (max_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * phase));
}

inline double lr_schedule(std::int64_t step, const TrainConfig& cfg) {
    DGK_REQUIRE(cfg.total_steps > 0, "lr_schedule needs a resolved total_steps");
    return lr_schedule(step, cfg.total_steps, cfg.max_lr, cfg.effective_min_lr());
}

// ---------------------------------------------------------------------------
// Loss curves

struct CurvePoint {
    std::int64_t step = 0;
    double lr = 0.0;
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double val_perplexity = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::string curve_cell(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_loss_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
    std::ofstream out(path);
    if (!out) {
        throw IoError{"cannot open loss curve file " + path, 0};
    }
    out << "step,lr,train_loss,val_loss,val_perplexity\n";
    for (const auto& pt : curve) {
        out << pt.step << ',' << detail::curve_cell(pt.lr) << ','
            << detail::curve_cell(pt.train_loss) << ',' << detail::curve_cell(pt.val_loss) << ','
            << detail::curve_cell(pt.val_perplexity) << '\n';
    }
    if (!out) {
        throw IoError{"failed writing loss curve file " + path, 0};
    }
}

inline std::vector<CurvePoint> read_loss_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError{"cannot open loss curve file " + path, 0};
    }
    std::string line;
    if (!std::getline(in, line) || line != "step,lr,train_loss,val_loss,val_perplexity") {
        throw IoError{"unrecognized loss curve header in " + path, 0};
    }
    std::vector<CurvePoint> curve;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        cells.resize(5);
        CurvePoint pt;
        pt.step = std::stoll(cells[0]);
        auto num = [](const std::string& s) {
            return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
        };
        pt.lr = num(cells[1]);
        pt.train_loss = num(cells[2]);
        pt.val_loss = num(cells[3]);
        pt.val_perplexity = num(cells[4]);
        curve.push_back(pt);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Trainer

/// Runs the optimization loop over pre-built training examples. Owns the
/// optimizer/shuffle state; everything is deterministic given the config
/// seed, and a checkpointed TrainState resumes the run bitwise.
template <class S>
class Trainer {
public:
    Trainer(BehaviorModel<S>& model, TrainConfig cfg, std::vector<TrainingExample> train_set,
            std::vector<TrainingExample> val_set)
        : model_(model), cfg_(cfg), train_(std::move(train_set)), val_(std::move(val_set)) {
        cfg_.validate();
        if (train_.empty()) {
            throw ConfigError{"training set is empty", "train.dataset"};
        }
        const auto n = static_cast<std::int64_t>(train_.size());
        batch_ = std::min<std::int64_t>(cfg_.batch_size, n);
        steps_per_epoch_ = n / batch_;
        if (cfg_.total_steps == 0) {
            cfg_.total_steps = static_cast<std::int64_t>(cfg_.epochs) * steps_per_epoch_;
        }
        DGK_REQUIRE(cfg_.total_steps > 0, "resolved total_steps is zero");
        state_.train_seed = cfg_.seed;
        state_.rng = Rng::split(cfg_.seed, kDropoutStream).state();
        state_.adam_m.assign(model_.param_count(), 0.0);
        state_.adam_v.assign(model_.param_count(), 0.0);
    }

    /// The resolved config (total_steps and min_lr filled in).
    const TrainConfig& config() const noexcept { return cfg_; }
    std::int64_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
    std::int64_t total_steps() const noexcept { return cfg_.total_steps; }

    TrainState& state() noexcept { return state_; }

    /// Adopts optimizer state from a loaded checkpoint to resume training.
    void restore(const TrainState& ts) {
        const auto want = static_cast<std::size_t>(model_.param_count());
        DGK_REQUIRE(ts.adam_m.size() == want && ts.adam_v.size() == want,
                    "restored optimizer state does not match the model");
        DGK_REQUIRE(ts.step >= 0 && ts.step <= cfg_.total_steps,
                    "restored step is outside this run");
        state_ = ts;
    }

    std::vector<CurvePoint> train() { return train_until(cfg_.total_steps); }

    /// Runs optimizer steps until `target_step` (clamped to the schedule
    /// end) and returns the curve rows it produced.
    std::vector<CurvePoint> train_until(std::int64_t target_step) {
        const std::int64_t target = std::min(target_step, cfg_.total_steps);
        std::vector<CurvePoint> curve;
        if (state_.step == 0 && target >= 0) {
            CurvePoint init;
            init.step = 0;
            init.lr = lr_schedule(0, cfg_);
            fill_validation(init);
            curve.push_back(init);
        }
        while (state_.step < target) {
            const double lr = lr_schedule(state_.step, cfg_);
            double loss;
            try {
                loss = step_once(lr);
            } catch (const Error& e) {
                // Exploding parameters usually trip the non-finite
                // activation guards before the loss itself goes NaN.
                if (std::string_view{e.what()}.find("non-finite") != std::string_view::npos) {
                    throw divergence_error(state_.step);
                }
                throw;
            }
            CurvePoint pt;
            pt.step = state_.step;  // already incremented by step_once
            pt.lr = lr;
            pt.train_loss = loss;
            if (state_.step % cfg_.val_interval == 0 || state_.step == cfg_.total_steps) {
                try {
                    fill_validation(pt);
                } catch (const Error& e) {
                    // Same story as step_once: a post-update blowup can
                    // surface first in the validation forward pass. The
                    // step-0 row above stays unguarded on purpose, since a
                    // non-finite init is a bug, not divergence.
                    if (std::string_view{e.what()}.find("non-finite") !=
                        std::string_view::npos) {
                        throw divergence_error(state_.step);
                    }
                    throw;
                }
            }
            curve.push_back(pt);
            if (!std::isfinite(loss)) {
                throw divergence_error(state_.step);
            }
        }
        return curve;
    }

    /// Mean validation loss at the current parameters (teacher-forced CE,
    /// or the winner-takes-all objective for the one-shot variant).
    double validation_loss() const {
        DGK_REQUIRE(!val_.empty(), "validation set is empty");
        double sum = 0.0;
        for (const auto& ex : val_) {
            sum += example_loss(ex);
        }
        return sum / static_cast<double>(val_.size());
    }

private:
    static constexpr std::uint64_t kDropoutStream = 0x6472'6f70'6f75'7431ull;

    Error divergence_error(std::int64_t step) const {
        nlohmann::json dump;
        dump["train"] = detail::train_config_to_json(cfg_);
        dump["encoder"] = detail::encoder_to_json(model_.config().encoder);
        dump["decoder"] = detail::decoder_to_json(model_.config().decoder);
        return Error{"training diverged at step " + std::to_string(step) +
                     "; config: " + dump.dump()};
    }

    void fill_validation(CurvePoint& pt) const {
        if (val_.empty()) {
            return;
        }
        pt.val_loss = validation_loss();
        pt.val_perplexity = std::exp(pt.val_loss);
    }

    /// Loss of one example at the current parameters, no gradients.
    double example_loss(const TrainingExample& ex) const {
        if (model_.config().variant == Variant::autoregressive) {
            const auto mem = model_.encoder().encode(model_.params(), ex.vs, nullptr);
            const auto logits = model_.decoder().forward_teacher_forced(model_.params(),
                                                                        ex.positions, mem,
                                                                        nullptr);
            return ce_loss(logits, ex.targets).mean;
        }
        const auto mem = model_.encoder().encode(model_.params(), ex.vs, nullptr);
        const auto out = model_.one_shot().forward(model_.params(), mem, nullptr);
        return one_shot_loss(out, ex, nullptr, nullptr);
    }

    /// Winner-takes-all objective: squared error of the closest mode plus
    /// cross-entropy pushing the score head toward that mode. Optionally
    /// fills the output gradients (d/dtraj, d/dscores), unscaled.
    double one_shot_loss(const OneShotOutput<S>& out, const TrainingExample& ex,
                         Matrix<S>* dtraj, Vector<S>* dscores) const {
        const auto k_modes = out.traj.rows();
        const auto width = out.traj.cols();
        DGK_REQUIRE(static_cast<std::size_t>(width) == 2 * ex.future.size(),
                    "one-shot head width does not match the horizon");
        int best = 0;
        double best_mse = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_modes; ++k) {
            double mse = 0.0;
            for (std::size_t t = 0; t < ex.future.size(); ++t) {
                const double dx = static_cast<double>(out.traj(k, 2 * t)) - ex.future[t].x;
                const double dy = static_cast<double>(out.traj(k, 2 * t + 1)) - ex.future[t].y;
                mse += dx * dx + dy * dy;
            }
            mse /= static_cast<double>(width);
            if (mse < best_mse) {
                best_mse = mse;
                best = k;
            }
        }
        // Stable log-softmax over the K scores.
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_modes; ++k) {
            m = std::max(m, static_cast<double>(out.scores[k]));
        }
        double z = 0.0;
        for (int k = 0; k < k_modes; ++k) {
            z += std::exp(static_cast<double>(out.scores[k]) - m);
        }
        const double score_ce = m + std::log(z) - static_cast<double>(out.scores[best]);
        if (dtraj != nullptr) {
            dtraj->setZero(k_modes, width);
            for (std::size_t t = 0; t < ex.future.size(); ++t) {
                (*dtraj)(best, 2 * t) = static_cast<S>(
                    2.0 * (static_cast<double>(out.traj(best, 2 * t)) - ex.future[t].x) /
                    static_cast<double>(width));
                (*dtraj)(best, 2 * t + 1) = static_cast<S>(
                    2.0 * (static_cast<double>(out.traj(best, 2 * t + 1)) - ex.future[t].y) /
                    static_cast<double>(width));
            }
        }
        if (dscores != nullptr) {
            dscores->resize(k_modes);
            for (int k = 0; k < k_modes; ++k) {
                const double p = std::exp(static_cast<double>(out.scores[k]) - m) / z;
                (*dscores)[k] = static_cast<S>(p - (k == best ? 1.0 : 0.0));
            }
        }
        return best_mse + score_ce;
    }

    /// Forward + backward of one example; gradients are scaled by `scale`
    /// and accumulated into `g`. Returns the example loss.
    double accumulate_example(const TrainingExample& ex, double scale, ParamStore<S>& g,
                              Rng& rng) {
        const auto& p = model_.params();
        if (model_.config().variant == Variant::autoregressive) {
            EncoderCache<S> ec;
            DecoderCache<S> dc;
            const auto mem = model_.encoder().encode(p, ex.vs, &ec, &rng);
            const auto logits = model_.decoder().forward_teacher_forced(p, ex.positions, mem, &dc,
                                                                        &rng);
            const CeLoss loss = ce_loss(logits, ex.targets);
            const Matrix<S> dlogits = ce_loss_backward(logits, ex.targets, scale);
            const Matrix<S> dmem = model_.decoder().backward(p, g, dc, dlogits);
            model_.encoder().backward(p, g, ec, dmem);
            return loss.mean;
        }
        EncoderCache<S> ec;
        OneShotCache<S> oc;
        const auto mem = model_.encoder().encode(p, ex.vs, &ec, &rng);
        const auto out = model_.one_shot().forward(p, mem, &oc, &rng);
        Matrix<S> dtraj;
        Vector<S> dscores;
        const double loss = one_shot_loss(out, ex, &dtraj, &dscores);
        dtraj *= static_cast<S>(scale);
        dscores *= static_cast<S>(scale);
        const Matrix<S> dmem = model_.one_shot().backward(p, g, oc, dtraj, dscores);
        model_.encoder().backward(p, g, ec, dmem);
        return loss;
    }

    /// One optimizer step: gradient over the next deterministic batch,
    /// global-norm clip, Adam with decoupled weight decay.
    double step_once(double lr) {
        const std::int64_t epoch = state_.step / steps_per_epoch_;
        const std::int64_t slot = state_.step % steps_per_epoch_;
        if (epoch != perm_epoch_) {
            perm_.resize(train_.size());
            for (std::size_t i = 0; i < perm_.size(); ++i) {
                perm_[i] = i;
            }
            Rng shuffle_rng = Rng::split(state_.train_seed, static_cast<std::uint64_t>(epoch));
            shuffle_rng.shuffle(perm_);
            perm_epoch_ = epoch;
        }

        Rng rng;
        rng.set_state(state_.rng);
        ParamStore<S> g(model_.layout().size());
        double batch_loss = 0.0;
        const double scale = 1.0 / static_cast<double>(batch_);
        for (std::int64_t i = 0; i < batch_; ++i) {
            const auto& ex = train_[perm_[static_cast<std::size_t>(slot * batch_ + i)]];
            batch_loss += accumulate_example(ex, scale, g, rng) * scale;
        }
        state_.rng = rng.state();

        // Global-norm clip, accumulated in double.
        if (cfg_.clip_norm > 0.0) {
            double sq = 0.0;
            for (std::int64_t i = 0; i < model_.layout().size(); ++i) {
                const double v = static_cast<double>(g.data()[i]);
                sq += v * v;
            }
            const double norm = std::sqrt(sq);
            if (norm > cfg_.clip_norm) {
                const S k = static_cast<S>(cfg_.clip_norm / norm);
                for (std::int64_t i = 0; i < model_.layout().size(); ++i) {
                    g.data()[i] *= k;
                }
            }
        }

        // Adam (moments in double), decoupled weight decay on matrices only:
        // biases, gains, and other vector-shaped tensors are left alone.
        const std::int64_t t = state_.step + 1;
        const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t));
        for (const auto& [name, ref] : model_.layout().entries()) {
            const bool decay = ref.rows > 1 && ref.cols > 1;
            for (std::int64_t i = ref.offset; i < ref.offset + ref.size(); ++i) {
                const double grad = static_cast<double>(g.data()[i]);
                auto& m = state_.adam_m[static_cast<std::size_t>(i)];
                auto& v = state_.adam_v[static_cast<std::size_t>(i)];
                m = cfg_.adam_beta1 * m + (1.0 - cfg_.adam_beta1) * grad;
                v = cfg_.adam_beta2 * v + (1.0 - cfg_.adam_beta2) * grad * grad;
                double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.adam_eps);
                if (decay) {
                    update += lr * cfg_.weight_decay * static_cast<double>(model_.params().data()[i]);
                }
                model_.params().data()[i] =
                    static_cast<S>(static_cast<double>(model_.params().data()[i]) - update);
            }
        }
        ++state_.step;
        return batch_loss;
    }

    BehaviorModel<S>& model_;
    TrainConfig cfg_;
    std::vector<TrainingExample> train_, val_;
    std::int64_t batch_ = 0;
    std::int64_t steps_per_epoch_ = 0;
    TrainState state_;
    std::vector<std::size_t> perm_;
    std::int64_t perm_epoch_ = -1;
};

/// Builds teacher-forcing examples for every scene.
inline std::vector<TrainingExample> make_examples(const std::vector<Scene>& scenes,
                                                  const ActionVocabulary& vocab) {
    std::vector<TrainingExample> out;
    out.reserve(scenes.size());
    for (const auto& scene : scenes) {
        out.push_back(make_example(scene, vocab));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool ok = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 0.0;
    double worst = 0.0;
    bool ok = true;

    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& e : entries) {
            if (!e.ok) {
                out.push_back(e.name);
            }
        }
        return out;
    }
};

/// Central finite differences against the analytic backward pass, reported
/// per parameter tensor. Meant for tiny double-precision models; cost is
/// two full forwards per parameter. Run it at a generic parameter point:
/// exact-zero pre-activations sit on ReLU kinks where the two-sided
/// difference straddles subgradients.
inline GradCheckReport grad_check(BehaviorModel<double>& model, const TrainingExample& ex,
                                  double tolerance = 1e-4, double h = 1e-5) {
    DGK_REQUIRE(model.config().variant == Variant::autoregressive,
                "grad_check covers the autoregressive variant");
    const auto& layout = model.layout();
    auto loss = [&] {
        const auto mem = model.encoder().encode(model.params(), ex.vs, nullptr);
        const auto logits =
            model.decoder().forward_teacher_forced(model.params(), ex.positions, mem, nullptr);
        return ce_loss(logits, ex.targets).mean;
    };
    ParamStore<double> g(layout.size());
    {
        EncoderCache<double> ec;
        DecoderCache<double> dc;
        const auto mem = model.encoder().encode(model.params(), ex.vs, &ec);
        const auto logits =
            model.decoder().forward_teacher_forced(model.params(), ex.positions, mem, &dc);
        const auto dlogits = ce_loss_backward(logits, ex.targets);
        const auto dmem = model.decoder().backward(model.params(), g, dc, dlogits);
        model.encoder().backward(model.params(), g, ec, dmem);
    }

    GradCheckReport report;
    report.tolerance = tolerance;
    for (const auto& [name, ref] : layout.entries()) {
        GradCheckEntry entry;
        entry.name = name;
        for (std::int64_t i = ref.offset; i < ref.offset + ref.size(); ++i) {
            double* slot = model.params().data() + i;
            const double orig = *slot;
            *slot = orig + h;
            const double lp = loss();
            *slot = orig - h;
            const double lm = loss();
            *slot = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double a = g.data()[i];
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        entry.ok = entry.max_rel_err <= tolerance;
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.ok = report.ok && entry.ok;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace dgk

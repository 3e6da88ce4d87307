// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

// The dgk command line: data generation, training, evaluation, rollouts,
// closed-loop runs, scaling grids, law fitting and plotting, one subcommand
// each. Every run resolves its options as defaults < config file < flags
// (< DGK_SEED for the seed), executes, and writes one run_manifest.json
// into the output directory. Exit codes: 0 success, 2 usage, 3 bad config
// (the error JSON carries the offending field path), 1 everything else.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dgk/evaluation.hpp"
#include "dgk/inference.hpp"
#include "dgk/manifest.hpp"
#include "dgk/scaling.hpp"
#include "dgk/svg.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string d2s(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in{csv};
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flat config files: `key = value` lines, `#` comments, and a mandatory
// `schema_version = 1`. Each subcommand consumes the keys it understands;
// anything left over is a config error naming the key.

class FlatConfig {
public:
    FlatConfig() = default;

    static FlatConfig load(const std::string& path) {
        std::ifstream in{path};
        if (!in) {
            throw dgk::IoError{"cannot open config file: " + path, 0};
        }
        FlatConfig cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) {
                line.erase(hash);
            }
            const auto strip = [](std::string s) {
                const auto from = s.find_first_not_of(" \t\r");
                const auto to = s.find_last_not_of(" \t\r");
                return from == std::string::npos ? std::string{} : s.substr(from, to - from + 1);
            };
            if (strip(line).empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw dgk::ConfigError{"config line " + std::to_string(line_no) +
                                           " is not key = value",
                                       path};
            }
            const auto key = strip(line.substr(0, eq));
            const auto value = strip(line.substr(eq + 1));
            if (key.empty()) {
                throw dgk::ConfigError{"empty key on config line " + std::to_string(line_no),
                                       path};
            }
            if (!cfg.kv_.emplace(key, value).second) {
                throw dgk::ConfigError{"duplicate config key", key};
            }
        }
        std::string version;
        if (!cfg.take_raw("schema_version", version)) {
            throw dgk::ConfigError{"config file is missing schema_version", "schema_version"};
        }
        if (version != "1") {
            throw dgk::ConfigError{"unsupported config schema_version " + version,
                                   "schema_version"};
        }
        return cfg;
    }

    void take(const char* key, std::string& out) { take_raw(key, out); }

    void take(const char* key, double& out) {
        std::string raw;
        if (take_raw(key, raw)) {
            out = parse_double(key, raw);
        }
    }

    void take(const char* key, int& out) {
        std::string raw;
        if (take_raw(key, raw)) {
            out = static_cast<int>(parse_int(key, raw));
        }
    }

    void take(const char* key, std::int64_t& out) {
        std::string raw;
        if (take_raw(key, raw)) {
            out = parse_int(key, raw);
        }
    }

    void take(const char* key, std::uint64_t& out) {
        std::string raw;
        if (take_raw(key, raw)) {
            try {
                std::size_t used = 0;
                out = std::stoull(raw, &used);
                if (used != raw.size()) {
                    throw std::invalid_argument{raw};
                }
            } catch (const std::exception&) {
                throw dgk::ConfigError{"expected an unsigned integer, got '" + raw + "'", key};
            }
        }
    }

    void take(const char* key, bool& out) {
        std::string raw;
        if (take_raw(key, raw)) {
            if (raw == "true" || raw == "1") {
                out = true;
            } else if (raw == "false" || raw == "0") {
                out = false;
            } else {
                throw dgk::ConfigError{"expected true/false, got '" + raw + "'", key};
            }
        }
    }

    void finish() const {
        if (!kv_.empty()) {
            throw dgk::ConfigError{"unknown config key", kv_.begin()->first};
        }
    }

private:
    bool take_raw(const std::string& key, std::string& out) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) {
            return false;
        }
        out = it->second;
        kv_.erase(it);
        return true;
    }

    static double parse_double(const char* key, const std::string& raw) {
        try {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) {
                throw std::invalid_argument{raw};
            }
            return v;
        } catch (const std::exception&) {
            throw dgk::ConfigError{"expected a number, got '" + raw + "'", key};
        }
    }

    static std::int64_t parse_int(const char* key, const std::string& raw) {
        try {
            std::size_t used = 0;
            const std::int64_t v = std::stoll(raw, &used);
            if (used != raw.size()) {
                throw std::invalid_argument{raw};
            }
            return v;
        } catch (const std::exception&) {
            throw dgk::ConfigError{"expected an integer, got '" + raw + "'", key};
        }
    }

    std::map<std::string, std::string> kv_;
};

std::optional<FlatConfig> load_config_if(const std::string& path) {
    if (path.empty()) {
        return std::nullopt;
    }
    return FlatConfig::load(path);
}

template <class T>
void override_if(const CLI::Option* opt, T& dst, const T& src) {
    if (opt != nullptr && opt->count() > 0) {
        dst = src;
    }
}

/// DGK_SEED outranks everything, including an explicit --seed.
void apply_env_seed(std::uint64_t& seed) {
    const char* env = std::getenv("DGK_SEED");
    if (env == nullptr) {
        return;
    }
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(env, &used);
        if (used != std::string{env}.size()) {
            throw std::invalid_argument{env};
        }
        seed = v;
    } catch (const std::exception&) {
        throw dgk::ConfigError{"DGK_SEED must be an unsigned integer", "DGK_SEED"};
    }
}

std::string prepare_out_dir(const std::string& out) {
    if (out.empty()) {
        throw dgk::ConfigError{"--out is required", "out"};
    }
    fs::create_directories(out);
    return out;
}

void finish_manifest(const std::string& out_dir, dgk::RunManifest m) {
    const auto path = (fs::path(out_dir) / "run_manifest.json").string();
    m.outputs.push_back(path);
    dgk::write_run_manifest(path, m);
}

// ---------------------------------------------------------------------------
// gen-data

struct GenOpts {
    std::string config;
    std::string out;
    std::int64_t scenes = 1000;
    double train_frac = 0.9;
    std::uint64_t seed = 0;
    int horizon = 60;
    int history = 11;
    double density = 1.0;
    double tick = 0.1;
    std::string scripts = "lane_follow,lane_change,double_park,jaywalk,oncoming";
    int vocab_bins = 13;
    double vocab_accel = 0.03;
};

dgk::GenConfig to_gen_config(const GenOpts& o) {
    dgk::GenConfig gen;
    gen.horizon = o.horizon;
    gen.history_len = o.history;
    gen.density = o.density;
    gen.tick_duration = o.tick;
    gen.vocab = {};
    gen.vocab.bins_per_axis = o.vocab_bins;
    gen.vocab.max_accel = o.vocab_accel;
    gen.scripts.clear();
    for (const auto& name : split_list(o.scripts)) {
        gen.scripts.push_back(dgk::script_from_string(name));
    }
    gen.validate();
    return gen;
}

std::map<std::string, std::string> gen_snapshot(const GenOpts& o) {
    return {
        {"gen.scenes", std::to_string(o.scenes)},
        {"gen.train_frac", d2s(o.train_frac)},
        {"gen.seed", std::to_string(o.seed)},
        {"gen.horizon", std::to_string(o.horizon)},
        {"gen.history_len", std::to_string(o.history)},
        {"gen.density", d2s(o.density)},
        {"gen.tick_duration", d2s(o.tick)},
        {"gen.scripts", o.scripts},
        {"vocab.bins_per_axis", std::to_string(o.vocab_bins)},
        {"vocab.max_accel", d2s(o.vocab_accel)},
    };
}

void apply_config(GenOpts& o, FlatConfig& f) {
    f.take("gen.scenes", o.scenes);
    f.take("gen.train_frac", o.train_frac);
    f.take("gen.seed", o.seed);
    f.take("gen.horizon", o.horizon);
    f.take("gen.history_len", o.history);
    f.take("gen.density", o.density);
    f.take("gen.tick_duration", o.tick);
    f.take("gen.scripts", o.scripts);
    f.take("vocab.bins_per_axis", o.vocab_bins);
    f.take("vocab.max_accel", o.vocab_accel);
    f.finish();
}

int run_gen_data(const GenOpts& o) {
    if (o.scenes < 1) {
        throw dgk::ConfigError{"gen.scenes must be at least 1", "gen.scenes"};
    }
    if (o.train_frac < 0.0 || o.train_frac > 1.0) {
        throw dgk::ConfigError{"gen.train_frac must be in [0, 1]", "gen.train_frac"};
    }
    const auto gen = to_gen_config(o);
    const auto out = prepare_out_dir(o.out);
    const auto ds = dgk::generate_dataset(gen, static_cast<int>(o.scenes), o.train_frac, o.seed);
    dgk::write_dataset(out, ds);
    std::cerr << "gen-data: " << ds.train.size() << " train + " << ds.val.size()
              << " val scenes -> " << out << "\n";

    dgk::RunManifest m;
    m.subcommand = "gen-data";
    m.seed = o.seed;
    m.config = gen_snapshot(o);
    m.outputs = {(fs::path(out) / "train.dgk").string(), (fs::path(out) / "val.dgk").string(),
                 (fs::path(out) / "manifest.json").string()};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string config;
    std::string out;
    std::string data;
    std::string preset = "0.1m";
    std::int64_t steps = 0;
    int epochs = 1;
    int batch = 64;
    double max_lr = 1e-3;
    double min_lr = 0.0;
    double weight_decay = 0.01;
    double clip_norm = 1.0;
    double dropout = 0.0;
    std::int64_t val_interval = 50;
    std::uint64_t seed = 0;
};

void apply_config(TrainOpts& o, FlatConfig& f) {
    f.take("train.data", o.data);
    f.take("model.preset", o.preset);
    f.take("train.steps", o.steps);
    f.take("train.epochs", o.epochs);
    f.take("train.batch_size", o.batch);
    f.take("train.max_lr", o.max_lr);
    f.take("train.min_lr", o.min_lr);
    f.take("train.weight_decay", o.weight_decay);
    f.take("train.clip_norm", o.clip_norm);
    f.take("model.dropout", o.dropout);
    f.take("train.val_interval", o.val_interval);
    f.take("train.seed", o.seed);
    f.finish();
}

std::map<std::string, std::string> train_snapshot(const TrainOpts& o) {
    return {
        {"train.data", o.data},
        {"model.preset", o.preset},
        {"train.steps", std::to_string(o.steps)},
        {"train.epochs", std::to_string(o.epochs)},
        {"train.batch_size", std::to_string(o.batch)},
        {"train.max_lr", d2s(o.max_lr)},
        {"train.min_lr", d2s(o.min_lr)},
        {"train.weight_decay", d2s(o.weight_decay)},
        {"train.clip_norm", d2s(o.clip_norm)},
        {"model.dropout", d2s(o.dropout)},
        {"train.val_interval", std::to_string(o.val_interval)},
        {"train.seed", std::to_string(o.seed)},
    };
}

/// The model's sequence shape comes from the dataset manifest, not flags:
/// horizon and vocabulary must match what the scenes were generated with.
dgk::ModelConfig model_from_dataset(const std::string& preset, double dropout,
                                    const json& manifest) {
    auto cfg = dgk::model_preset(preset);
    cfg.decoder.horizon = manifest.at("horizon").get<int>();
    cfg.vocab.bins_per_axis = manifest.at("vocab").at("bins_per_axis").get<int>();
    cfg.vocab.max_accel = manifest.at("vocab").at("max_accel").get<double>();
    cfg.decoder.vocab_size = cfg.vocab.size();
    cfg.encoder.dropout = dropout;
    cfg.decoder.dropout = dropout;
    cfg.validate();
    return cfg;
}

int run_train(const TrainOpts& o) {
    if (o.data.empty()) {
        throw dgk::ConfigError{"--data is required", "train.data"};
    }
    const auto out = prepare_out_dir(o.out);
    const auto ds = dgk::read_dataset(o.data);
    if (ds.train.empty()) {
        throw dgk::ConfigError{"dataset has no training scenes", "train.data"};
    }
    const auto cfg = model_from_dataset(o.preset, o.dropout, ds.manifest);
    const auto vocab = cfg.vocab;

    dgk::BehaviorModel<float> model{cfg};
    dgk::Rng init{o.seed};
    model.init(init);

    dgk::TrainConfig tc;
    tc.batch_size = o.batch;
    tc.max_lr = o.max_lr;
    tc.min_lr = o.min_lr;
    tc.total_steps = o.steps;
    tc.epochs = o.epochs;
    tc.weight_decay = o.weight_decay;
    tc.clip_norm = o.clip_norm;
    tc.val_interval = o.val_interval;
    tc.seed = o.seed;

    dgk::Trainer<float> trainer{model, tc, dgk::make_examples(ds.train, vocab),
                                dgk::make_examples(ds.val, vocab)};
    std::cerr << "train: " << model.param_count() << " params, " << trainer.total_steps()
              << " steps\n";
    const auto curve = trainer.train();

    const auto ckpt = (fs::path(out) / "model.ckpt").string();
    const auto curve_csv = (fs::path(out) / "curve.csv").string();
    dgk::save_checkpoint(ckpt, model, &trainer.state());
    dgk::write_loss_curve_csv(curve_csv, curve);
    std::cerr << "train: final loss " << curve.back().train_loss << " -> " << ckpt << "\n";

    dgk::RunManifest m;
    m.subcommand = "train";
    m.seed = o.seed;
    m.config = train_snapshot(o);
    m.inputs = {o.data};
    m.outputs = {ckpt, curve_csv};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    std::string config;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string baseline; // prior report.json for normalized metrics
    std::string split = "val";
    int samples = 64;
    int modes = 6;
    double temperature = 1.0;
    double miss_threshold = 2.0;
    int t_eval = 0;
    bool all_samples = false;
    bool oracle = false;
    std::uint64_t seed = 0;
};

void apply_config(EvalOpts& o, FlatConfig& f) {
    f.take("eval.data", o.data);
    f.take("eval.checkpoint", o.checkpoint);
    f.take("eval.baseline", o.baseline);
    f.take("eval.split", o.split);
    f.take("plan.samples", o.samples);
    f.take("plan.modes", o.modes);
    f.take("plan.temperature", o.temperature);
    f.take("eval.miss_threshold", o.miss_threshold);
    f.take("eval.t_eval", o.t_eval);
    f.take("eval.all_samples", o.all_samples);
    f.take("eval.oracle", o.oracle);
    f.take("eval.seed", o.seed);
    f.finish();
}

std::map<std::string, std::string> eval_snapshot(const EvalOpts& o) {
    return {
        {"eval.data", o.data},
        {"eval.checkpoint", o.checkpoint},
        {"eval.baseline", o.baseline},
        {"eval.split", o.split},
        {"plan.samples", std::to_string(o.samples)},
        {"plan.modes", std::to_string(o.modes)},
        {"plan.temperature", d2s(o.temperature)},
        {"eval.miss_threshold", d2s(o.miss_threshold)},
        {"eval.t_eval", std::to_string(o.t_eval)},
        {"eval.all_samples", o.all_samples ? "true" : "false"},
        {"eval.oracle", o.oracle ? "true" : "false"},
        {"eval.seed", std::to_string(o.seed)},
    };
}

const std::vector<dgk::Scene>& pick_split(const dgk::Dataset& ds, const std::string& split) {
    if (split == "val") {
        return ds.val;
    }
    if (split == "train") {
        return ds.train;
    }
    throw dgk::ConfigError{"split must be train or val", "eval.split"};
}

/// Ground-truth-as-prediction evaluation: one mode, the logged future. A
/// pipeline sanity check; minADE and minFDE are zero by construction.
dgk::MetricReport oracle_report(const std::vector<dgk::Scene>& scenes, int t_eval,
                                double miss_threshold) {
    DGK_REQUIRE(!scenes.empty(), "oracle eval needs at least one scene");
    dgk::MetricReport report;
    report.scenes = static_cast<int>(scenes.size());
    report.horizon = static_cast<int>(scenes.front().future_gt.size());
    report.t_eval = t_eval == 0 ? report.horizon : t_eval;
    std::vector<std::vector<dgk::Trajectory>> modes_batch;
    std::vector<dgk::Trajectory> gt_batch;
    for (const auto& scene : scenes) {
        const std::vector<dgk::Trajectory> modes = {scene.future_gt};
        report.min_ade += dgk::min_ade(modes, scene.future_gt);
        report.min_fde += dgk::min_fde(modes, scene.future_gt, report.t_eval);
        report.offroad_rate += dgk::offroad_rate(modes, scene.drivable);
        std::vector<dgk::AgentTrack> others;
        for (std::size_t a = 0; a < scene.nearby_future.size(); ++a) {
            dgk::AgentTrack track;
            track.states = scene.nearby_future[a];
            track.type = scene.nearby[a].type;
            others.push_back(std::move(track));
        }
        report.collision_rate += dgk::collision_rate(modes, others);
        modes_batch.push_back(modes);
        gt_batch.push_back(scene.future_gt);
    }
    const double n = static_cast<double>(scenes.size());
    report.min_ade /= n;
    report.min_fde /= n;
    report.offroad_rate /= n;
    report.collision_rate /= n;
    report.miss_rate = dgk::miss_rate(modes_batch, gt_batch, report.t_eval, miss_threshold);
    return report;
}

json report_to_json(const dgk::MetricReport& r) {
    return json{{"min_ade", r.min_ade},
                {"min_fde", r.min_fde},
                {"miss_rate", r.miss_rate},
                {"offroad_rate", r.offroad_rate},
                {"collision_rate", r.collision_rate},
                {"t_eval", r.t_eval},
                {"horizon", r.horizon},
                {"scenes", r.scenes}};
}

dgk::MetricReport report_from_json(const json& j) {
    dgk::MetricReport r;
    r.min_ade = j.at("min_ade").get<double>();
    r.min_fde = j.at("min_fde").get<double>();
    r.miss_rate = j.at("miss_rate").get<double>();
    r.offroad_rate = j.at("offroad_rate").get<double>();
    r.collision_rate = j.at("collision_rate").get<double>();
    r.t_eval = j.at("t_eval").get<int>();
    r.horizon = j.at("horizon").get<int>();
    r.scenes = j.at("scenes").get<int>();
    return r;
}

int run_eval(const EvalOpts& o) {
    if (o.data.empty()) {
        throw dgk::ConfigError{"--data is required", "eval.data"};
    }
    if (!o.oracle && o.checkpoint.empty()) {
        throw dgk::ConfigError{"--checkpoint is required unless --oracle", "eval.checkpoint"};
    }
    const auto out = prepare_out_dir(o.out);
    const auto ds = dgk::read_dataset(o.data);
    const auto& scenes = pick_split(ds, o.split);
    if (scenes.empty()) {
        throw dgk::ConfigError{"selected split is empty", "eval.split"};
    }

    dgk::MetricReport report;
    if (o.oracle) {
        report = oracle_report(scenes, o.t_eval, o.miss_threshold);
    } else {
        const auto model = dgk::load_checkpoint<float>(o.checkpoint);
        dgk::EvalConfig ec;
        ec.plan.samples = o.samples;
        ec.plan.modes = o.modes;
        ec.plan.temperature = o.temperature;
        ec.plan.seed = o.seed;
        ec.miss_threshold = o.miss_threshold;
        ec.t_eval = o.t_eval;
        ec.all_samples = o.all_samples;
        report = dgk::evaluate_model(model, scenes, ec);
    }

    json doc{{"schema_version", 1}, {"report", report_to_json(report)}};
    if (!o.baseline.empty()) {
        std::ifstream in{o.baseline};
        if (!in) {
            throw dgk::IoError{"cannot open baseline report: " + o.baseline, 0};
        }
        const auto base = report_from_json(json::parse(in).at("report"));
        const auto normalized = dgk::normalize_metrics({report}, base);
        doc["normalized"] = report_to_json(normalized.front());
    }
    const auto report_path = (fs::path(out) / "report.json").string();
    dgk::write_text_file(report_path, doc.dump(2) + "\n");
    std::cout << doc["report"].dump(2) << "\n";

    dgk::RunManifest m;
    m.subcommand = "eval";
    m.seed = o.seed;
    m.config = eval_snapshot(o);
    m.inputs = {o.data};
    if (!o.checkpoint.empty()) {
        m.inputs.push_back(o.checkpoint);
    }
    if (!o.baseline.empty()) {
        m.inputs.push_back(o.baseline);
    }
    m.outputs = {report_path};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// rollout

struct RolloutOpts {
    std::string config;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string split = "val";
    std::int64_t scene = 0; // index into the split
    int samples = 64;
    int modes = 6;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

void apply_config(RolloutOpts& o, FlatConfig& f) {
    f.take("rollout.data", o.data);
    f.take("rollout.checkpoint", o.checkpoint);
    f.take("rollout.split", o.split);
    f.take("rollout.scene", o.scene);
    f.take("plan.samples", o.samples);
    f.take("plan.modes", o.modes);
    f.take("plan.temperature", o.temperature);
    f.take("rollout.seed", o.seed);
    f.finish();
}

std::map<std::string, std::string> rollout_snapshot(const RolloutOpts& o) {
    return {
        {"rollout.data", o.data},
        {"rollout.checkpoint", o.checkpoint},
        {"rollout.split", o.split},
        {"rollout.scene", std::to_string(o.scene)},
        {"plan.samples", std::to_string(o.samples)},
        {"plan.modes", std::to_string(o.modes)},
        {"plan.temperature", d2s(o.temperature)},
        {"rollout.seed", std::to_string(o.seed)},
    };
}

json trajectories_to_json(const std::vector<dgk::Trajectory>& trajs) {
    json arr = json::array();
    for (const auto& t : trajs) {
        json pts = json::array();
        for (const auto& p : t) {
            pts.push_back({p.x, p.y});
        }
        arr.push_back(std::move(pts));
    }
    return arr;
}

std::vector<dgk::Trajectory> trajectories_from_json(const json& arr) {
    std::vector<dgk::Trajectory> out;
    for (const auto& t : arr) {
        dgk::Trajectory traj;
        for (const auto& p : t) {
            traj.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        out.push_back(std::move(traj));
    }
    return out;
}

int run_rollout(const RolloutOpts& o) {
    if (o.data.empty() || o.checkpoint.empty()) {
        throw dgk::ConfigError{"--data and --checkpoint are required", "rollout.data"};
    }
    const auto out = prepare_out_dir(o.out);
    const auto ds = dgk::read_dataset(o.data);
    const auto& scenes = pick_split(ds, o.split);
    if (o.scene < 0 || o.scene >= static_cast<std::int64_t>(scenes.size())) {
        throw dgk::ConfigError{"scene index out of range", "rollout.scene"};
    }
    const auto& scene = scenes[static_cast<std::size_t>(o.scene)];
    const auto model = dgk::load_checkpoint<float>(o.checkpoint);

    dgk::PlanConfig pc;
    pc.samples = o.samples;
    pc.modes = o.modes;
    pc.temperature = o.temperature;
    pc.seed = o.seed;
    const auto plan = dgk::plan(model, scene, pc);

    json doc{{"schema_version", 1},
             {"scene_id", scene.scene_id},
             {"frame", "world"},
             {"temperature", plan.temperature},
             {"seed", plan.seed},
             {"samples", trajectories_to_json(plan.samples)},
             {"modes", trajectories_to_json(plan.modes)},
             {"mode_probs", plan.mode_probs}};
    const auto path = (fs::path(out) / "rollout.json").string();
    dgk::write_text_file(path, doc.dump(2) + "\n");

    dgk::RunManifest m;
    m.subcommand = "rollout";
    m.seed = o.seed;
    m.config = rollout_snapshot(o);
    m.inputs = {o.data, o.checkpoint};
    m.outputs = {path};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// closed-loop

struct ClosedLoopOpts {
    std::string config;
    std::string out;
    std::string checkpoint;
    std::string map = "straight_road";
    std::string script = "lane_follow";
    double density = 1.0;
    int ticks = 100;
    int replan = 10;
    int samples = 64;
    int modes = 6;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

void apply_config(ClosedLoopOpts& o, FlatConfig& f) {
    f.take("loop.checkpoint", o.checkpoint);
    f.take("loop.map", o.map);
    f.take("loop.script", o.script);
    f.take("loop.density", o.density);
    f.take("loop.ticks", o.ticks);
    f.take("loop.replan_period", o.replan);
    f.take("plan.samples", o.samples);
    f.take("plan.modes", o.modes);
    f.take("plan.temperature", o.temperature);
    f.take("loop.seed", o.seed);
    f.finish();
}

std::map<std::string, std::string> loop_snapshot(const ClosedLoopOpts& o) {
    return {
        {"loop.checkpoint", o.checkpoint},
        {"loop.map", o.map},
        {"loop.script", o.script},
        {"loop.density", d2s(o.density)},
        {"loop.ticks", std::to_string(o.ticks)},
        {"loop.replan_period", std::to_string(o.replan)},
        {"plan.samples", std::to_string(o.samples)},
        {"plan.modes", std::to_string(o.modes)},
        {"plan.temperature", d2s(o.temperature)},
        {"loop.seed", std::to_string(o.seed)},
    };
}

int run_closed_loop(const ClosedLoopOpts& o) {
    if (o.checkpoint.empty()) {
        throw dgk::ConfigError{"--checkpoint is required", "loop.checkpoint"};
    }
    if (o.ticks < 1) {
        throw dgk::ConfigError{"ticks must be at least 1", "loop.ticks"};
    }
    const auto out = prepare_out_dir(o.out);
    const auto model = dgk::load_checkpoint<float>(o.checkpoint);

    dgk::WorldConfig wc;
    wc.map_template = dgk::map_template_from_string(o.map);
    wc.ego_script = dgk::script_from_string(o.script);
    wc.density = o.density;
    wc.seed = o.seed;
    wc.horizon = model.config().decoder.horizon;
    auto world = dgk::make_world(wc, o.ticks);

    dgk::ClosedLoopConfig lc;
    lc.replan_period = o.replan;
    lc.plan.samples = o.samples;
    lc.plan.modes = o.modes;
    lc.plan.temperature = o.temperature;
    lc.plan.seed = o.seed;
    dgk::ClosedLoopRunner<float> runner{model, lc};
    runner.run(world, o.ticks);
    const auto& log = runner.log();

    json plans = json::array();
    for (const auto& p : log.plans) {
        plans.push_back({{"tick", p.tick},
                         {"planner_failed", p.planner_failed},
                         {"modes", trajectories_to_json(p.plan.modes)},
                         {"mode_probs", p.plan.mode_probs}});
    }
    json events = json::array();
    int collisions = 0;
    int offroads = 0;
    for (const auto& e : world.events) {
        events.push_back({{"tick", e.tick}, {"collision", e.collision}, {"offroad", e.offroad}});
        collisions += e.collision ? 1 : 0;
        offroads += e.offroad ? 1 : 0;
    }
    json ego = json::array();
    for (const auto& s : world.ego) {
        ego.push_back({s.position.x, s.position.y});
    }
    json doc{{"schema_version", 1}, {"ticks", log.ticks},      {"plans", plans},
             {"events", events},    {"collisions", collisions}, {"offroad", offroads},
             {"ego", ego}};
    const auto path = (fs::path(out) / "closed_loop.json").string();
    dgk::write_text_file(path, doc.dump(2) + "\n");
    std::cerr << "closed-loop: " << log.ticks << " ticks, " << log.plans.size() << " plans, "
              << collisions << " collision ticks, " << offroads << " offroad ticks\n";

    dgk::RunManifest m;
    m.subcommand = "closed-loop";
    m.seed = o.seed;
    m.config = loop_snapshot(o);
    m.inputs = {o.checkpoint};
    m.outputs = {path};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// scale

struct ScaleOpts {
    std::string config;
    std::string out;
    std::string sizes = "0.1m,0.4m";
    std::string data_sizes = "1000,4000";
    std::string lrs = "1e-3";
    int val_scenes = 256;
    int epochs = 1;
    int batch = 64;
    int horizon = 60;
    int history = 11;
    double density = 1.0;
    double flop_constant = 6.0;
    std::uint64_t seed = 0;
};

void apply_config(ScaleOpts& o, FlatConfig& f) {
    f.take("scale.sizes", o.sizes);
    f.take("scale.data_sizes", o.data_sizes);
    f.take("scale.lrs", o.lrs);
    f.take("scale.val_scenes", o.val_scenes);
    f.take("scale.epochs", o.epochs);
    f.take("scale.batch_size", o.batch);
    f.take("gen.horizon", o.horizon);
    f.take("gen.history_len", o.history);
    f.take("gen.density", o.density);
    f.take("scale.flop_constant", o.flop_constant);
    f.take("scale.seed", o.seed);
    f.finish();
}

std::map<std::string, std::string> scale_snapshot(const ScaleOpts& o) {
    return {
        {"scale.sizes", o.sizes},
        {"scale.data_sizes", o.data_sizes},
        {"scale.lrs", o.lrs},
        {"scale.val_scenes", std::to_string(o.val_scenes)},
        {"scale.epochs", std::to_string(o.epochs)},
        {"scale.batch_size", std::to_string(o.batch)},
        {"gen.horizon", std::to_string(o.horizon)},
        {"gen.history_len", std::to_string(o.history)},
        {"gen.density", d2s(o.density)},
        {"scale.flop_constant", d2s(o.flop_constant)},
        {"scale.seed", std::to_string(o.seed)},
    };
}

int run_scale(const ScaleOpts& o) {
    const auto out = prepare_out_dir(o.out);

    dgk::GridSpec spec;
    spec.gen.horizon = o.horizon;
    spec.gen.history_len = o.history;
    spec.gen.density = o.density;
    spec.val_scenes = o.val_scenes;
    spec.epochs = o.epochs;
    spec.batch_size = o.batch;
    spec.flop_constant = o.flop_constant;
    spec.seed = o.seed;

    std::vector<double> lrs;
    for (const auto& s : split_list(o.lrs)) {
        try {
            lrs.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw dgk::ConfigError{"bad learning rate '" + s + "'", "scale.lrs"};
        }
    }
    for (const auto& name : split_list(o.sizes)) {
        dgk::SizeSpec size;
        size.name = name;
        size.model = dgk::model_preset(name);
        size.model.decoder.horizon = o.horizon;
        size.lr_candidates = lrs;
        spec.sizes.push_back(std::move(size));
    }
    for (const auto& s : split_list(o.data_sizes)) {
        try {
            spec.dataset_sizes.push_back(std::stoll(s));
        } catch (const std::exception&) {
            throw dgk::ConfigError{"bad dataset size '" + s + "'", "scale.data_sizes"};
        }
    }

    const auto records = dgk::run_grid<float>(spec, [](const dgk::ScalingRecord& r) {
        std::cerr << "scale: " << r.size_name << " D=" << r.unique_samples
                  << (r.diverged ? " diverged" : " val " + d2s(r.val_loss)) << " ("
                  << d2s(r.wall_time) << "s)\n";
    });
    const auto csv = (fs::path(out) / "records.csv").string();
    dgk::write_records_csv(csv, records);

    dgk::RunManifest m;
    m.subcommand = "scale";
    m.seed = o.seed;
    m.config = scale_snapshot(o);
    m.outputs = {csv};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// fit-law

struct FitOpts {
    std::string config;
    std::string out;
    std::string records;
    std::string x = "samples"; // samples | flops | params
    std::string y = "val_loss"; // val_loss | val_perplexity
    std::string size;           // restrict to one size name
};

void apply_config(FitOpts& o, FlatConfig& f) {
    f.take("fit.records", o.records);
    f.take("fit.x", o.x);
    f.take("fit.y", o.y);
    f.take("fit.size", o.size);
    f.finish();
}

std::map<std::string, std::string> fit_snapshot(const FitOpts& o) {
    return {{"fit.records", o.records}, {"fit.x", o.x}, {"fit.y", o.y}, {"fit.size", o.size}};
}

std::vector<std::pair<double, double>> fit_points(const std::vector<dgk::ScalingRecord>& records,
                                                  const FitOpts& o) {
    std::vector<std::pair<double, double>> points;
    for (const auto& r : records) {
        if (r.diverged || (!o.size.empty() && r.size_name != o.size)) {
            continue;
        }
        double x = 0.0;
        if (o.x == "samples") {
            x = static_cast<double>(r.unique_samples);
        } else if (o.x == "flops") {
            x = r.flops;
        } else if (o.x == "params") {
            x = static_cast<double>(r.model_params);
        } else {
            throw dgk::ConfigError{"x must be samples, flops or params", "fit.x"};
        }
        double y = 0.0;
        if (o.y == "val_loss") {
            y = r.val_loss;
        } else if (o.y == "val_perplexity") {
            y = r.val_perplexity;
        } else {
            throw dgk::ConfigError{"y must be val_loss or val_perplexity", "fit.y"};
        }
        points.emplace_back(x, y);
    }
    return points;
}

int run_fit_law(const FitOpts& o) {
    if (o.records.empty()) {
        throw dgk::ConfigError{"--records is required", "fit.records"};
    }
    const auto out = prepare_out_dir(o.out);
    const auto records = dgk::read_records_csv(o.records);
    const auto points = fit_points(records, o);
    const auto fit = dgk::fit_power_law(points);

    json doc{{"schema_version", 1},
             {"x", o.x},
             {"y", o.y},
             {"size", o.size},
             {"points", points.size()},
             {"slope", fit.slope},
             {"intercept", fit.intercept},
             {"r_squared", fit.r_squared}};
    const auto path = (fs::path(out) / "fit.json").string();
    dgk::write_text_file(path, doc.dump(2) + "\n");
    std::cout << "log(" << o.y << ") = " << d2s(fit.slope) << " * log(" << o.x << ") + "
              << d2s(fit.intercept) << "  (R^2 = " << d2s(fit.r_squared) << ")\n";

    dgk::RunManifest m;
    m.subcommand = "fit-law";
    m.config = fit_snapshot(o);
    m.inputs = {o.records};
    m.outputs = {path};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------
// plot

struct PlotOpts {
    std::string config;
    std::string out;
    std::string kind = "scaling"; // scaling | curve | scene
    std::string records;          // scaling: records.csv
    std::string curve;            // curve: curve.csv
    std::string data;             // scene: dataset dir
    std::string rollout;          // scene: optional rollout.json overlay
    std::string split = "val";
    std::int64_t scene = 0;
    std::string x = "samples";
    bool fit = false; // scaling: overlay the fitted law
};

void apply_config(PlotOpts& o, FlatConfig& f) {
    f.take("plot.kind", o.kind);
    f.take("plot.records", o.records);
    f.take("plot.curve", o.curve);
    f.take("plot.data", o.data);
    f.take("plot.rollout", o.rollout);
    f.take("plot.split", o.split);
    f.take("plot.scene", o.scene);
    f.take("plot.x", o.x);
    f.take("plot.fit", o.fit);
    f.finish();
}

std::map<std::string, std::string> plot_snapshot(const PlotOpts& o) {
    return {
        {"plot.kind", o.kind},   {"plot.records", o.records}, {"plot.curve", o.curve},
        {"plot.data", o.data},   {"plot.rollout", o.rollout}, {"plot.split", o.split},
        {"plot.scene", std::to_string(o.scene)},              {"plot.x", o.x},
        {"plot.fit", o.fit ? "true" : "false"},
    };
}

std::string plot_scaling(const PlotOpts& o, std::vector<std::string>& inputs) {
    if (o.records.empty()) {
        throw dgk::ConfigError{"--records is required for scaling plots", "plot.records"};
    }
    inputs.push_back(o.records);
    const auto records = dgk::read_records_csv(o.records);
    FitOpts fo;
    fo.x = o.x;

    const std::vector<std::string> palette = {"#1a73e8", "#d93025", "#188038",
                                              "#f9ab00", "#9334e6", "#5f6368"};
    std::map<std::string, dgk::PlotSeries> by_size;
    std::vector<std::pair<double, double>> all_points;
    for (const auto& r : records) {
        if (r.diverged) {
            continue;
        }
        auto& series = by_size[r.size_name];
        if (series.points.empty()) {
            series.label = r.size_name;
            series.color = palette[by_size.size() - 1 < palette.size() ? by_size.size() - 1
                                                                       : palette.size() - 1];
        }
        const auto pt = fit_points({r}, fo);
        series.points.push_back(pt.front());
        all_points.push_back(pt.front());
    }
    std::vector<dgk::PlotSeries> series;
    for (auto& [name, s] : by_size) {
        std::sort(s.points.begin(), s.points.end());
        series.push_back(std::move(s));
    }
    if (o.fit) {
        const auto law = dgk::fit_power_law(all_points);
        double lo = all_points.front().first;
        double hi = lo;
        for (const auto& [x, y] : all_points) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        dgk::PlotSeries line;
        line.label = "fit, slope " + d2s(law.slope).substr(0, 8);
        line.color = "#202124";
        line.markers = false;
        line.points = {{lo, std::exp(law.intercept + law.slope * std::log(lo))},
                       {hi, std::exp(law.intercept + law.slope * std::log(hi))}};
        series.push_back(std::move(line));
    }
    dgk::PlotOptions po;
    po.x_label = o.x;
    po.y_label = "val loss";
    po.log_x = true;
    po.log_y = true;
    return dgk::svg_plot(series, po);
}

std::string plot_curve(const PlotOpts& o, std::vector<std::string>& inputs) {
    if (o.curve.empty()) {
        throw dgk::ConfigError{"--curve is required for curve plots", "plot.curve"};
    }
    inputs.push_back(o.curve);
    const auto curve = dgk::read_loss_curve_csv(o.curve);
    dgk::PlotSeries train;
    train.label = "train loss";
    train.color = "#1a73e8";
    train.markers = false;
    dgk::PlotSeries val;
    val.label = "val loss";
    val.color = "#d93025";
    for (const auto& pt : curve) {
        train.points.emplace_back(static_cast<double>(pt.step), pt.train_loss);
        if (!std::isnan(pt.val_loss)) {
            val.points.emplace_back(static_cast<double>(pt.step), pt.val_loss);
        }
    }
    dgk::PlotOptions po;
    po.x_label = "step";
    po.y_label = "loss";
    return dgk::svg_plot({train, val}, po);
}

std::string plot_scene(const PlotOpts& o, std::vector<std::string>& inputs) {
    if (o.data.empty()) {
        throw dgk::ConfigError{"--data is required for scene plots", "plot.data"};
    }
    inputs.push_back(o.data);
    const auto ds = dgk::read_dataset(o.data);
    const auto& scenes = pick_split(ds, o.split);
    if (o.scene < 0 || o.scene >= static_cast<std::int64_t>(scenes.size())) {
        throw dgk::ConfigError{"scene index out of range", "plot.scene"};
    }
    const auto& scene = scenes[static_cast<std::size_t>(o.scene)];
    if (o.rollout.empty()) {
        return dgk::svg_scene(scene);
    }
    inputs.push_back(o.rollout);
    std::ifstream in{o.rollout};
    if (!in) {
        throw dgk::IoError{"cannot open rollout: " + o.rollout, 0};
    }
    const auto doc = json::parse(in);
    dgk::TrajectorySet pred;
    pred.modes = trajectories_from_json(doc.at("modes"));
    pred.mode_probs = doc.at("mode_probs").get<std::vector<double>>();
    return dgk::svg_scene(scene, &pred);
}

int run_plot(const PlotOpts& o) {
    const auto out = prepare_out_dir(o.out);
    std::vector<std::string> inputs;
    std::string svg;
    if (o.kind == "scaling") {
        svg = plot_scaling(o, inputs);
    } else if (o.kind == "curve") {
        svg = plot_curve(o, inputs);
    } else if (o.kind == "scene") {
        svg = plot_scene(o, inputs);
    } else {
        throw dgk::ConfigError{"kind must be scaling, curve or scene", "plot.kind"};
    }
    const auto path = (fs::path(out) / "plot.svg").string();
    dgk::write_text_file(path, svg);

    dgk::RunManifest m;
    m.subcommand = "plot";
    m.config = plot_snapshot(o);
    m.inputs = inputs;
    m.outputs = {path};
    finish_manifest(out, std::move(m));
    return 0;
}

// ---------------------------------------------------------------------------

int dispatch(int argc, char** argv) {
    CLI::App app{"drivekit: synthetic driving scenes, behavior models, scaling grids"};
    app.require_subcommand(1);

    GenOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic scene dataset");
    gen_cmd->add_option("--config", gen.config, "flat key = value config file");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    auto* gen_scenes = gen_cmd->add_option("--scenes", gen.scenes, "number of scenes");
    auto* gen_frac = gen_cmd->add_option("--train-frac", gen.train_frac, "train split fraction");
    auto* gen_seed = gen_cmd->add_option("--seed", gen.seed, "generator seed");
    auto* gen_horizon = gen_cmd->add_option("--horizon", gen.horizon, "future ticks");
    auto* gen_history = gen_cmd->add_option("--history", gen.history, "history ticks");
    auto* gen_density = gen_cmd->add_option("--density", gen.density, "traffic density");
    auto* gen_tick = gen_cmd->add_option("--tick", gen.tick, "tick duration seconds");
    auto* gen_scripts = gen_cmd->add_option("--scripts", gen.scripts, "comma-separated scripts");

    TrainOpts train;
    auto* train_cmd = app.add_subcommand("train", "Train a behavior model on a dataset");
    train_cmd->add_option("--config", train.config, "flat key = value config file");
    train_cmd->add_option("--out", train.out, "output directory")->required();
    auto* train_data = train_cmd->add_option("--data", train.data, "dataset directory");
    auto* train_preset = train_cmd->add_option("--preset", train.preset, "0.1m | 0.4m | 1.6m");
    auto* train_steps = train_cmd->add_option("--steps", train.steps, "total steps (0 = epochs)");
    auto* train_epochs = train_cmd->add_option("--epochs", train.epochs, "epochs");
    auto* train_batch = train_cmd->add_option("--batch", train.batch, "batch size");
    auto* train_lr = train_cmd->add_option("--max-lr", train.max_lr, "peak learning rate");
    auto* train_min_lr = train_cmd->add_option("--min-lr", train.min_lr, "floor learning rate");
    auto* train_wd = train_cmd->add_option("--weight-decay", train.weight_decay, "weight decay");
    auto* train_clip = train_cmd->add_option("--clip", train.clip_norm, "gradient clip norm");
    auto* train_dropout = train_cmd->add_option("--dropout", train.dropout, "dropout rate");
    auto* train_vi = train_cmd->add_option("--val-interval", train.val_interval, "steps");
    auto* train_seed = train_cmd->add_option("--seed", train.seed, "training seed");

    EvalOpts ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    eval_cmd->add_option("--config", ev.config, "flat key = value config file");
    eval_cmd->add_option("--out", ev.out, "output directory")->required();
    auto* eval_data = eval_cmd->add_option("--data", ev.data, "dataset directory");
    auto* eval_ckpt = eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
    auto* eval_base = eval_cmd->add_option("--baseline", ev.baseline, "baseline report.json");
    auto* eval_split = eval_cmd->add_option("--split", ev.split, "train | val");
    auto* eval_samples = eval_cmd->add_option("--samples", ev.samples, "rollout samples");
    auto* eval_modes = eval_cmd->add_option("--modes", ev.modes, "clustered modes");
    auto* eval_temp = eval_cmd->add_option("--temperature", ev.temperature, "sampling temp");
    auto* eval_miss = eval_cmd->add_option("--miss-threshold", ev.miss_threshold, "meters");
    auto* eval_teval = eval_cmd->add_option("--t-eval", ev.t_eval, "1-based tick, 0 = horizon");
    auto* eval_all = eval_cmd->add_flag("--all-samples", ev.all_samples,
                                        "offroad/collision over samples");
    auto* eval_oracle = eval_cmd->add_flag("--oracle", ev.oracle,
                                           "evaluate ground truth as the prediction");
    auto* eval_seed = eval_cmd->add_option("--seed", ev.seed, "plan seed");

    RolloutOpts ro;
    auto* ro_cmd = app.add_subcommand("rollout", "Plan one scene and emit trajectories as JSON");
    ro_cmd->add_option("--config", ro.config, "flat key = value config file");
    ro_cmd->add_option("--out", ro.out, "output directory")->required();
    auto* ro_data = ro_cmd->add_option("--data", ro.data, "dataset directory");
    auto* ro_ckpt = ro_cmd->add_option("--checkpoint", ro.checkpoint, "model checkpoint");
    auto* ro_split = ro_cmd->add_option("--split", ro.split, "train | val");
    auto* ro_scene = ro_cmd->add_option("--scene", ro.scene, "scene index in the split");
    auto* ro_samples = ro_cmd->add_option("--samples", ro.samples, "rollout samples");
    auto* ro_modes = ro_cmd->add_option("--modes", ro.modes, "clustered modes");
    auto* ro_temp = ro_cmd->add_option("--temperature", ro.temperature, "sampling temp");
    auto* ro_seed = ro_cmd->add_option("--seed", ro.seed, "plan seed");

    ClosedLoopOpts cl;
    auto* cl_cmd = app.add_subcommand("closed-loop", "Drive the simulator with a checkpoint");
    cl_cmd->add_option("--config", cl.config, "flat key = value config file");
    cl_cmd->add_option("--out", cl.out, "output directory")->required();
    auto* cl_ckpt = cl_cmd->add_option("--checkpoint", cl.checkpoint, "model checkpoint");
    auto* cl_map = cl_cmd->add_option("--map", cl.map,
                                      "straight_road | intersection | two_lane_with_parking");
    auto* cl_script = cl_cmd->add_option("--script", cl.script, "ego warmup script");
    auto* cl_density = cl_cmd->add_option("--density", cl.density, "traffic density");
    auto* cl_ticks = cl_cmd->add_option("--ticks", cl.ticks, "ticks to run");
    auto* cl_replan = cl_cmd->add_option("--replan", cl.replan, "ticks between plans");
    auto* cl_samples = cl_cmd->add_option("--samples", cl.samples, "rollout samples");
    auto* cl_modes = cl_cmd->add_option("--modes", cl.modes, "clustered modes");
    auto* cl_temp = cl_cmd->add_option("--temperature", cl.temperature, "sampling temp");
    auto* cl_seed = cl_cmd->add_option("--seed", cl.seed, "world and plan seed");

    ScaleOpts sc;
    auto* sc_cmd = app.add_subcommand("scale", "Run a model-size x dataset-size grid");
    sc_cmd->add_option("--config", sc.config, "flat key = value config file");
    sc_cmd->add_option("--out", sc.out, "output directory")->required();
    auto* sc_sizes = sc_cmd->add_option("--sizes", sc.sizes, "comma-separated presets");
    auto* sc_data = sc_cmd->add_option("--data-sizes", sc.data_sizes, "comma-separated counts");
    auto* sc_lrs = sc_cmd->add_option("--lrs", sc.lrs, "comma-separated LR candidates");
    auto* sc_val = sc_cmd->add_option("--val-scenes", sc.val_scenes, "fixed validation scenes");
    auto* sc_epochs = sc_cmd->add_option("--epochs", sc.epochs, "epochs per cell");
    auto* sc_batch = sc_cmd->add_option("--batch", sc.batch, "batch size");
    auto* sc_horizon = sc_cmd->add_option("--horizon", sc.horizon, "future ticks");
    auto* sc_history = sc_cmd->add_option("--history", sc.history, "history ticks");
    auto* sc_density = sc_cmd->add_option("--density", sc.density, "traffic density");
    auto* sc_seed = sc_cmd->add_option("--seed", sc.seed, "grid seed");

    FitOpts fit;
    auto* fit_cmd = app.add_subcommand("fit-law", "Fit a power law to grid records");
    fit_cmd->add_option("--config", fit.config, "flat key = value config file");
    fit_cmd->add_option("--out", fit.out, "output directory")->required();
    auto* fit_records = fit_cmd->add_option("--records", fit.records, "records.csv path");
    auto* fit_x = fit_cmd->add_option("--x", fit.x, "samples | flops | params");
    auto* fit_y = fit_cmd->add_option("--y", fit.y, "val_loss | val_perplexity");
    auto* fit_size = fit_cmd->add_option("--size", fit.size, "restrict to one size name");

    PlotOpts plot;
    auto* plot_cmd = app.add_subcommand("plot", "Render records, curves or scenes as SVG");
    plot_cmd->add_option("--config", plot.config, "flat key = value config file");
    plot_cmd->add_option("--out", plot.out, "output directory")->required();
    auto* plot_kind = plot_cmd->add_option("--kind", plot.kind, "scaling | curve | scene");
    auto* plot_records = plot_cmd->add_option("--records", plot.records, "records.csv path");
    auto* plot_curve_opt = plot_cmd->add_option("--curve", plot.curve, "curve.csv path");
    auto* plot_data = plot_cmd->add_option("--data", plot.data, "dataset directory");
    auto* plot_rollout = plot_cmd->add_option("--rollout", plot.rollout, "rollout.json overlay");
    auto* plot_split = plot_cmd->add_option("--split", plot.split, "train | val");
    auto* plot_scene_opt = plot_cmd->add_option("--scene", plot.scene, "scene index");
    auto* plot_x = plot_cmd->add_option("--x", plot.x, "samples | flops | params");
    auto* plot_fit = plot_cmd->add_flag("--fit", plot.fit, "overlay the fitted law");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    // Options resolve as defaults < config file < flags; the parsed values
    // land in shadow copies so the file never tramples an explicit flag.
    if (gen_cmd->parsed()) {
        GenOpts flags = gen;
        GenOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(gen_scenes, o.scenes, flags.scenes);
        override_if(gen_frac, o.train_frac, flags.train_frac);
        override_if(gen_seed, o.seed, flags.seed);
        override_if(gen_horizon, o.horizon, flags.horizon);
        override_if(gen_history, o.history, flags.history);
        override_if(gen_density, o.density, flags.density);
        override_if(gen_tick, o.tick, flags.tick);
        override_if(gen_scripts, o.scripts, flags.scripts);
        apply_env_seed(o.seed);
        return run_gen_data(o);
    }
    if (train_cmd->parsed()) {
        TrainOpts flags = train;
        TrainOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(train_data, o.data, flags.data);
        override_if(train_preset, o.preset, flags.preset);
        override_if(train_steps, o.steps, flags.steps);
        override_if(train_epochs, o.epochs, flags.epochs);
        override_if(train_batch, o.batch, flags.batch);
        override_if(train_lr, o.max_lr, flags.max_lr);
        override_if(train_min_lr, o.min_lr, flags.min_lr);
        override_if(train_wd, o.weight_decay, flags.weight_decay);
        override_if(train_clip, o.clip_norm, flags.clip_norm);
        override_if(train_dropout, o.dropout, flags.dropout);
        override_if(train_vi, o.val_interval, flags.val_interval);
        override_if(train_seed, o.seed, flags.seed);
        apply_env_seed(o.seed);
        return run_train(o);
    }
    if (eval_cmd->parsed()) {
        EvalOpts flags = ev;
        EvalOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(eval_data, o.data, flags.data);
        override_if(eval_ckpt, o.checkpoint, flags.checkpoint);
        override_if(eval_base, o.baseline, flags.baseline);
        override_if(eval_split, o.split, flags.split);
        override_if(eval_samples, o.samples, flags.samples);
        override_if(eval_modes, o.modes, flags.modes);
        override_if(eval_temp, o.temperature, flags.temperature);
        override_if(eval_miss, o.miss_threshold, flags.miss_threshold);
        override_if(eval_teval, o.t_eval, flags.t_eval);
        override_if(eval_all, o.all_samples, flags.all_samples);
        override_if(eval_oracle, o.oracle, flags.oracle);
        override_if(eval_seed, o.seed, flags.seed);
        apply_env_seed(o.seed);
        return run_eval(o);
    }
    if (ro_cmd->parsed()) {
        RolloutOpts flags = ro;
        RolloutOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(ro_data, o.data, flags.data);
        override_if(ro_ckpt, o.checkpoint, flags.checkpoint);
        override_if(ro_split, o.split, flags.split);
        override_if(ro_scene, o.scene, flags.scene);
        override_if(ro_samples, o.samples, flags.samples);
        override_if(ro_modes, o.modes, flags.modes);
        override_if(ro_temp, o.temperature, flags.temperature);
        override_if(ro_seed, o.seed, flags.seed);
        apply_env_seed(o.seed);
        return run_rollout(o);
    }
    if (cl_cmd->parsed()) {
        ClosedLoopOpts flags = cl;
        ClosedLoopOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(cl_ckpt, o.checkpoint, flags.checkpoint);
        override_if(cl_map, o.map, flags.map);
        override_if(cl_script, o.script, flags.script);
        override_if(cl_density, o.density, flags.density);
        override_if(cl_ticks, o.ticks, flags.ticks);
        override_if(cl_replan, o.replan, flags.replan);
        override_if(cl_samples, o.samples, flags.samples);
        override_if(cl_modes, o.modes, flags.modes);
        override_if(cl_temp, o.temperature, flags.temperature);
        override_if(cl_seed, o.seed, flags.seed);
        apply_env_seed(o.seed);
        return run_closed_loop(o);
    }
    if (sc_cmd->parsed()) {
        ScaleOpts flags = sc;
        ScaleOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(sc_sizes, o.sizes, flags.sizes);
        override_if(sc_data, o.data_sizes, flags.data_sizes);
        override_if(sc_lrs, o.lrs, flags.lrs);
        override_if(sc_val, o.val_scenes, flags.val_scenes);
        override_if(sc_epochs, o.epochs, flags.epochs);
        override_if(sc_batch, o.batch, flags.batch);
        override_if(sc_horizon, o.horizon, flags.horizon);
        override_if(sc_history, o.history, flags.history);
        override_if(sc_density, o.density, flags.density);
        override_if(sc_seed, o.seed, flags.seed);
        apply_env_seed(o.seed);
        return run_scale(o);
    }
    if (fit_cmd->parsed()) {
        FitOpts flags = fit;
        FitOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(fit_records, o.records, flags.records);
        override_if(fit_x, o.x, flags.x);
        override_if(fit_y, o.y, flags.y);
        override_if(fit_size, o.size, flags.size);
        return run_fit_law(o);
    }
    if (plot_cmd->parsed()) {
        PlotOpts flags = plot;
        PlotOpts o;
        o.config = flags.config;
        o.out = flags.out;
        if (auto f = load_config_if(o.config)) {
            apply_config(o, *f);
        }
        override_if(plot_kind, o.kind, flags.kind);
        override_if(plot_records, o.records, flags.records);
        override_if(plot_curve_opt, o.curve, flags.curve);
        override_if(plot_data, o.data, flags.data);
        override_if(plot_rollout, o.rollout, flags.rollout);
        override_if(plot_split, o.split, flags.split);
        override_if(plot_scene_opt, o.scene, flags.scene);
        override_if(plot_x, o.x, flags.x);
        override_if(plot_fit, o.fit, flags.fit);
        return run_plot(o);
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const dgk::ConfigError& e) {
        nlohmann::json err{{"error", e.what()}, {"field", e.field()}};
        std::cerr << err.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}

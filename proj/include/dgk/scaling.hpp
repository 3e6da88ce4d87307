#pragma once

// Scaling experiments: parameter and FLOP accounting, a grid runner that
// trains one model per (size, dataset, learning-rate) cell, and the
// analyses layered on top (power-law fits, compute envelope, iso-FLOP
// groups). Everything downstream of the runner is pure arithmetic on
// ScalingRecord rows, so grids can also be loaded from CSV and re-analysed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgk/model.hpp"
#include "dgk/simulator.hpp"
#include "dgk/training.hpp"

namespace dgk {

// ---------------------------------------------------------------------------
// Accounting

/// Total learnable parameters for a model config. Closed form (no model is
/// built); equals runtime layout enumeration exactly.
inline std::int64_t count_params(const ModelConfig& cfg) {
    const std::int64_t enc = Encoder<float>::param_count(cfg.encoder);
    if (cfg.variant == Variant::one_shot) {
        return enc + OneShotDecoder<float>::param_count(cfg.decoder);
    }
    return enc + Decoder<float>::param_count(cfg.decoder);
}

/// Training compute, C = constant * N * tokens. The constant defaults to the
/// standard 6 (2 FLOPs/param forward, 4 backward); it is a parameter rather
/// than a literal so an alternative accounting can be swapped in without
/// touching any analysis code.
inline double estimate_flops(std::int64_t model_params, double tokens, double constant = 6.0) {
    DGK_REQUIRE(model_params >= 0, "estimate_flops: negative parameter count");
    DGK_REQUIRE(tokens >= 0.0, "estimate_flops: negative token count");
    DGK_REQUIRE(constant > 0.0, "estimate_flops: constant must be positive");
    return constant * static_cast<double>(model_params) * tokens;
}

/// Folds encoder work into decoder-step "tokens" so C = 6 * N * tokens prices
/// each subnetwork by its own size:
///
///   N * tokens = N_enc * enc_positions + N_dec * dec_steps
///
/// i.e. one encoded scene vector costs N_enc/N of a token and one decoder
/// step costs N_dec/N. A plain decoder-only accounting would bill encoder
/// work at the full N.
inline double amortized_tokens(std::int64_t enc_params, std::int64_t dec_params,
                               double enc_positions, double dec_steps) {
    DGK_REQUIRE(enc_params >= 0 && dec_params >= 0, "amortized_tokens: negative parameter count");
    DGK_REQUIRE(enc_positions >= 0.0 && dec_steps >= 0.0, "amortized_tokens: negative work");
    const double n = static_cast<double>(enc_params) + static_cast<double>(dec_params);
    DGK_REQUIRE(n > 0.0, "amortized_tokens: zero-parameter model");
    return (static_cast<double>(enc_params) * enc_positions +
            static_cast<double>(dec_params) * dec_steps) /
           n;
}

// ---------------------------------------------------------------------------
// Records

/// One trained grid cell. N, D and C use the conventional names: parameters,
/// unique training samples, train FLOPs.
struct ScalingRecord {
    std::string size_name;
    std::int64_t model_params = 0;   // N
    std::int64_t unique_samples = 0; // D
    double flops = 0.0;              // C
    double max_lr = 0.0;
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
    double val_loss = std::numeric_limits<double>::quiet_NaN();       // L
    double val_perplexity = std::numeric_limits<double>::quiet_NaN(); // exp(L)
    double wall_time = 0.0;                                           // seconds
    bool diverged = false;
};

inline constexpr const char* kRecordsHeader =
    "size,model_params,unique_samples,flops,max_lr,final_train_loss,val_loss,"
    "val_perplexity,wall_time,diverged";

inline void write_records_csv(const std::string& path, const std::vector<ScalingRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw IoError{"cannot open records file " + path, 0};
    }
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        DGK_REQUIRE(r.size_name.find(',') == std::string::npos,
                    "record size name must not contain a comma");
        out << r.size_name << ',' << r.model_params << ',' << r.unique_samples << ','
            << detail::curve_cell(r.flops) << ',' << detail::curve_cell(r.max_lr) << ','
            << detail::curve_cell(r.final_train_loss) << ',' << detail::curve_cell(r.val_loss)
            << ',' << detail::curve_cell(r.val_perplexity) << ','
            << detail::curve_cell(r.wall_time) << ',' << (r.diverged ? 1 : 0) << '\n';
    }
    if (!out.good()) {
        throw IoError{"failed writing records file " + path, 0};
    }
}

inline std::vector<ScalingRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError{"cannot open records file " + path, 0};
    }
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader) {
        throw IoError{"unrecognized records header in " + path, 0};
    }
    const auto num = [&](const std::string& cell) {
        if (cell.empty()) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() + cell.size()) {
            throw IoError{"bad numeric cell '" + cell + "' in " + path, 0};
        }
        return v;
    };
    std::vector<ScalingRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (cells.size() != 10) {
            throw IoError{"expected 10 cells per records row in " + path, 0};
        }
        ScalingRecord r;
        r.size_name = cells[0];
        r.model_params = static_cast<std::int64_t>(num(cells[1]));
        r.unique_samples = static_cast<std::int64_t>(num(cells[2]));
        r.flops = num(cells[3]);
        r.max_lr = num(cells[4]);
        r.final_train_loss = num(cells[5]);
        r.val_loss = num(cells[6]);
        r.val_perplexity = num(cells[7]);
        r.wall_time = num(cells[8]);
        r.diverged = num(cells[9]) != 0.0;
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Grid runner

/// One model size in a grid: a name for reports, the config, and the
/// learning rates to try. The runner keeps the best rate per cell, so the
/// candidates act like a per-size sweep.
struct SizeSpec {
    std::string name;
    ModelConfig model;
    std::vector<double> lr_candidates;
};

struct GridSpec {
    std::vector<SizeSpec> sizes;
    std::vector<std::int64_t> dataset_sizes; // unique training scenes per cell
    GenConfig gen;
    int val_scenes = 256;
    int epochs = 1;
    int batch_size = 64;
    double flop_constant = 6.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (sizes.empty()) {
            throw ConfigError{"at least one model size is required", "grid.sizes"};
        }
        for (const auto& s : sizes) {
            if (s.name.empty() || s.name.find(',') != std::string::npos) {
                throw ConfigError{"size names must be nonempty and comma-free", "grid.sizes"};
            }
            s.model.validate();
            if (s.lr_candidates.empty()) {
                throw ConfigError{"each size needs at least one learning rate",
                                  "grid.lr_candidates"};
            }
            for (double lr : s.lr_candidates) {
                if (!(lr > 0.0)) {
                    throw ConfigError{"learning rates must be positive", "grid.lr_candidates"};
                }
            }
            if (s.model.decoder.horizon != gen.horizon) {
                throw ConfigError{"model horizon must match the generator horizon",
                                  "grid.gen.horizon"};
            }
            if (s.model.vocab.bins_per_axis != gen.vocab.bins_per_axis ||
                s.model.vocab.max_accel != gen.vocab.max_accel) {
                throw ConfigError{"model vocabulary must match the generator vocabulary",
                                  "grid.gen.vocab"};
            }
        }
        if (dataset_sizes.empty()) {
            throw ConfigError{"at least one dataset size is required", "grid.dataset_sizes"};
        }
        for (auto d : dataset_sizes) {
            if (d < 1) {
                throw ConfigError{"dataset sizes must be positive", "grid.dataset_sizes"};
            }
        }
        gen.validate();
        if (val_scenes < 1) {
            throw ConfigError{"val_scenes must be at least 1", "grid.val_scenes"};
        }
        if (epochs < 1) {
            throw ConfigError{"epochs must be at least 1", "grid.epochs"};
        }
        if (batch_size < 1) {
            throw ConfigError{"batch_size must be at least 1", "grid.batch_size"};
        }
        if (!(flop_constant > 0.0)) {
            throw ConfigError{"flop_constant must be positive", "grid.flop_constant"};
        }
    }
};

/// Called once per finished cell (the chosen-LR record), in grid order.
using RecordSink = std::function<void(const ScalingRecord&)>;

namespace detail {

/// Mirrors Trainer's batching: the batch is clamped to the dataset and a
/// short final chunk is dropped, so one epoch visits steps * batch examples.
inline std::int64_t grid_total_steps(std::int64_t n, int batch, int epochs) {
    const std::int64_t b = std::min<std::int64_t>(batch, n);
    return static_cast<std::int64_t>(epochs) * (n / b);
}

}  // namespace detail

/// Trains every (size, dataset, learning rate) combination and keeps, per
/// (size, dataset) cell, the candidate with the lowest validation loss. All
/// cells share one fixed validation set, datasets are nested prefixes of a
/// single scene stream, and a size reuses its init draw across cells, so
/// rows differ only in what the cell is meant to vary. Diverged candidates
/// lose to any finished one; if every candidate diverges the cell's record
/// says so rather than disappearing.
template <class S = float>
std::vector<ScalingRecord> run_grid(const GridSpec& spec, const RecordSink& sink = {}) {
    spec.validate();
    const std::int64_t max_scenes =
        *std::max_element(spec.dataset_sizes.begin(), spec.dataset_sizes.end());

    const std::uint64_t pool_seed = Rng::split(spec.seed, 1).next_u64();
    const std::uint64_t val_seed = Rng::split(spec.seed, 2).next_u64();
    const std::uint64_t order_seed = Rng::split(spec.seed, 3).next_u64();

    const auto pool = generate_dataset(spec.gen, static_cast<int>(max_scenes), 1.0, pool_seed);
    const auto val_set = generate_dataset(spec.gen, spec.val_scenes, 0.0, val_seed);
    const auto pool_examples = make_examples(pool.train, spec.gen.vocab);
    const auto val_examples = make_examples(val_set.val, spec.gen.vocab);

    // Mean encoder positions per example, as a running prefix sum so each
    // nested dataset gets its own average for the FLOP accounting.
    std::vector<double> prefix_positions(pool_examples.size() + 1, 0.0);
    for (std::size_t i = 0; i < pool_examples.size(); ++i) {
        prefix_positions[i + 1] = prefix_positions[i] + pool_examples[i].vs.size();
    }

    std::vector<ScalingRecord> records;
    for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
        const auto& size = spec.sizes[si];
        const std::int64_t n_enc = Encoder<float>::param_count(size.model.encoder);
        const std::int64_t n_total = count_params(size.model);
        const std::int64_t n_dec = n_total - n_enc;
        const auto init_state = Rng::split(spec.seed, 0x100 + si).state();

        for (std::int64_t d : spec.dataset_sizes) {
            DGK_REQUIRE(d <= static_cast<std::int64_t>(pool_examples.size()),
                        "dataset size exceeds the generated pool");
            const std::vector<TrainingExample> subset(pool_examples.begin(),
                                                      pool_examples.begin() + d);
            const double mean_positions = prefix_positions[static_cast<std::size_t>(d)] /
                                          static_cast<double>(d);

            ScalingRecord best;
            bool have_best = false;
            for (double lr : size.lr_candidates) {
                BehaviorModel<S> model{size.model};
                Rng init;
                init.set_state(init_state);
                model.init(init);

                TrainConfig tc;
                tc.batch_size = spec.batch_size;
                tc.max_lr = lr;
                tc.epochs = spec.epochs;
                tc.seed = order_seed;
                tc.val_interval = std::numeric_limits<std::int64_t>::max();

                ScalingRecord rec;
                rec.size_name = size.name;
                rec.model_params = n_total;
                rec.unique_samples = d;
                rec.max_lr = lr;

                Trainer<S> trainer{model, tc, subset, val_examples};
                const std::int64_t batch = std::min<std::int64_t>(spec.batch_size, d);
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const auto curve = trainer.train();
                    rec.final_train_loss = curve.back().train_loss;
                    rec.val_loss = trainer.validation_loss();
                    rec.val_perplexity = std::exp(rec.val_loss);
                } catch (const Error& e) {
                    if (std::string_view{e.what()}.find("diverged") == std::string_view::npos) {
                        throw;
                    }
                    rec.diverged = true;
                }
                rec.wall_time =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

                // FLOPs for the steps that actually ran (matters for cells
                // that diverged part-way).
                const double visited =
                    static_cast<double>(trainer.state().step) * static_cast<double>(batch);
                const double tokens =
                    amortized_tokens(n_enc, n_dec, visited * mean_positions,
                                     visited * static_cast<double>(spec.gen.horizon));
                rec.flops = estimate_flops(n_total, tokens, spec.flop_constant);

                const bool better =
                    !have_best ||
                    (best.diverged && !rec.diverged) ||
                    (!best.diverged && !rec.diverged && rec.val_loss < best.val_loss);
                if (better) {
                    best = rec;
                    have_best = true;
                }
            }
            records.push_back(best);
            if (sink) {
                sink(records.back());
            }
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Power-law fit

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares on (ln x, ln y). Noiseless log-linear input is
/// recovered exactly (R^2 = 1); an all-equal-y input fits slope 0 with
/// R^2 defined as 1 because there is no variance left to explain.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) {
        throw Error{"fit_power_law: need at least two points"};
    }
    std::vector<double> lx(points.size());
    std::vector<double> ly(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0) || !(points[i].second > 0.0)) {
            throw Error{"fit_power_law: points must be positive"};
        }
        lx[i] = std::log(points[i].first);
        ly[i] = std::log(points[i].second);
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) {
        throw Error{"fit_power_law: zero variance in log x"};
    }
    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double pred = fit.slope * lx[i] + fit.intercept;
        ss_res += (ly[i] - pred) * (ly[i] - pred);
        ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    fit.r_squared = std::clamp(fit.r_squared, 0.0, 1.0);
    return fit;
}

// ---------------------------------------------------------------------------
// Compute envelope and iso-FLOP groups

struct BoundPoint {
    double flops = 0.0;
    double loss = 0.0;
};

/// Best loss achievable at each compute budget: merges the per-size curves
/// and takes the running minimum over flops. Curves must be sorted by flops;
/// duplicate budgets collapse to their best loss. The output loss column is
/// monotone non-increasing.
inline std::vector<BoundPoint> min_bound(const std::vector<std::vector<BoundPoint>>& curves) {
    std::vector<BoundPoint> merged;
    for (const auto& curve : curves) {
        for (std::size_t i = 0; i < curve.size(); ++i) {
            if (i > 0 && curve[i].flops < curve[i - 1].flops) {
                throw Error{"min_bound: curves must be sorted by flops"};
            }
            merged.push_back(curve[i]);
        }
    }
    std::sort(merged.begin(), merged.end(), [](const BoundPoint& a, const BoundPoint& b) {
        return a.flops < b.flops || (a.flops == b.flops && a.loss < b.loss);
    });
    std::vector<BoundPoint> bound;
    double running = std::numeric_limits<double>::infinity();
    for (const auto& pt : merged) {
        running = std::min(running, pt.loss);
        if (!bound.empty() && bound.back().flops == pt.flops) {
            bound.back().loss = running;
        } else {
            bound.push_back({pt.flops, running});
        }
    }
    return bound;
}

/// Exponential moving average for plotting noisy training curves, seeded at
/// the first sample: m_0 = x_0, m_t = decay * m_{t-1} + (1 - decay) * x_t.
inline std::vector<double> ema_smooth(const std::vector<double>& values, double decay = 0.99) {
    if (!(decay >= 0.0) || decay >= 1.0) {
        throw Error{"ema_smooth: decay must be in [0, 1)"};
    }
    std::vector<double> out;
    out.reserve(values.size());
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        m = i == 0 ? values[i] : decay * m + (1.0 - decay) * values[i];
        out.push_back(m);
    }
    return out;
}

struct IsoFlopPoint {
    double model_params = 0.0;
    double loss = 0.0;
};

struct IsoFlopGroup {
    double flops_lo = 0.0;
    double flops_hi = 0.0;
    std::vector<IsoFlopPoint> points; // loss vs N, sorted by N
    IsoFlopPoint best;                // argmin loss (ties to the smaller N)
};

struct IsoFlopAnalysis {
    std::vector<IsoFlopGroup> groups;
    std::vector<std::string> notes; // empty bins, skipped records
};

/// Bins records by compute budget and reports, per bin, the loss-vs-N series
/// and its best point. Bins are [edges[b], edges[b+1]), the last closed on
/// the right. Empty bins are omitted but noted; diverged or out-of-range
/// records are skipped with a note rather than silently dropped.
inline IsoFlopAnalysis iso_flop_groups(const std::vector<ScalingRecord>& records,
                                       const std::vector<double>& edges) {
    if (edges.size() < 2) {
        throw Error{"iso_flop_groups: need at least two bin edges"};
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            throw Error{"iso_flop_groups: bin edges must be strictly ascending"};
        }
    }
    const std::size_t bins = edges.size() - 1;
    std::vector<std::vector<IsoFlopPoint>> grouped(bins);
    IsoFlopAnalysis out;
    for (const auto& r : records) {
        if (r.diverged) {
            out.notes.push_back("skipped diverged record " + r.size_name + " at D=" +
                                std::to_string(r.unique_samples));
            continue;
        }
        if (r.flops < edges.front() || r.flops > edges.back()) {
            out.notes.push_back("record " + r.size_name + " at D=" +
                                std::to_string(r.unique_samples) + " is outside the bins");
            continue;
        }
        std::size_t b = bins - 1;
        for (std::size_t i = 0; i < bins; ++i) {
            if (r.flops < edges[i + 1]) {
                b = i;
                break;
            }
        }
        grouped[b].push_back({static_cast<double>(r.model_params), r.val_loss});
    }
    for (std::size_t b = 0; b < bins; ++b) {
        if (grouped[b].empty()) {
            out.notes.push_back("bin [" + std::to_string(edges[b]) + ", " +
                                std::to_string(edges[b + 1]) + ") is empty");
            continue;
        }
        IsoFlopGroup g;
        g.flops_lo = edges[b];
        g.flops_hi = edges[b + 1];
        g.points = std::move(grouped[b]);
        std::sort(g.points.begin(), g.points.end(),
                  [](const IsoFlopPoint& a, const IsoFlopPoint& b2) {
                      return a.model_params < b2.model_params;
                  });
        g.best = g.points.front();
        for (const auto& pt : g.points) {
            if (pt.loss < g.best.loss) {
                g.best = pt;
            }
        }
        out.groups.push_back(std::move(g));
    }
    return out;
}

}  // namespace dgk

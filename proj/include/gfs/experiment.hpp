#pragma once

/// @file experiment.hpp
/// @brief Seeded multi-run protocol: split, optional mask evolution, final
/// training, test evaluation and cross-seed aggregation.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "data.hpp"
#include "ga.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "nn.hpp"

namespace gfs {

struct ExperimentConfig {
    SynthConfig synthetic;
    std::string csv_path; ///< empty: generate from `synthetic`
    Scenario scenario = Scenario::LeftOnly;
    TrainConfig train;
    std::optional<GaConfig> ga;
    std::vector<std::uint64_t> run_seeds{1000, 2000, 3000, 4000, 5000};
    bool normalize = false;
    double train_fraction = 0.8;
    /// 0: one seeded 80/20 shuffle per run seed. k >= 2: k disjoint folds of
    /// a single shuffle seeded by run_seeds[0], one run per fold.
    int folds = 0;
};

inline void validate(const ExperimentConfig& c) {
    if (c.run_seeds.empty()) throw ValidationError("run_seeds must not be empty");
    for (std::size_t i = 0; i < c.run_seeds.size(); ++i)
        for (std::size_t j = i + 1; j < c.run_seeds.size(); ++j)
            if (c.run_seeds[i] == c.run_seeds[j]) throw ValidationError("run_seeds must be distinct");
    if (c.folds == 1 || c.folds < 0) throw ValidationError("folds must be 0 or >= 2");
    validate(c.train);
    if (c.ga) validate(*c.ga);
    if (c.csv_path.empty()) validate(c.synthetic);
}

inline Dataset load_source(const ExperimentConfig& c) {
    return c.csv_path.empty() ? generate_synthetic(c.synthetic) : load_dataset(c.csv_path);
}

struct SeedRun {
    std::uint64_t seed = 0;
    ConfusionMatrix confusion;
    EvalReport report;
    std::optional<GaResult> ga;
    Checkpoint checkpoint;
    double elapsed_seconds = 0;
};

struct RunSummary {
    std::vector<SeedRun> runs;
    EvalReport mean; ///< arithmetic mean of each metric over the runs where it is defined
};

namespace detail {

inline Metric mean_of(const std::vector<SeedRun>& runs, auto get) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : runs) {
        if (Metric m = get(r.report)) {
            sum += *m;
            ++n;
        }
    }
    return n ? Metric(sum / double(n)) : std::nullopt;
}

inline EvalReport aggregate(const std::vector<SeedRun>& runs) {
    EvalReport out;
    out.accuracy = *mean_of(runs, [](const EvalReport& r) { return Metric(r.accuracy); });
    for (int c = 0; c < 2; ++c) {
        out.per_class[c].precision = mean_of(runs, [c](const EvalReport& r) { return r.per_class[c].precision; });
        out.per_class[c].recall = mean_of(runs, [c](const EvalReport& r) { return r.per_class[c].recall; });
        out.per_class[c].f1 = mean_of(runs, [c](const EvalReport& r) { return r.per_class[c].f1; });
    }
    out.macro.precision = mean_of(runs, [](const EvalReport& r) { return r.macro.precision; });
    out.macro.recall = mean_of(runs, [](const EvalReport& r) { return r.macro.recall; });
    out.macro.f1 = mean_of(runs, [](const EvalReport& r) { return r.macro.f1; });
    return out;
}

inline ZScore restrict(const ZScore& z, std::span<const std::size_t> cols, bool two_stream) {
    std::vector<Eigen::Index> idx(cols.begin(), cols.end());
    ZScore out;
    out.mean_a = z.mean_a(idx);
    out.sd_a = z.sd_a(idx);
    if (two_stream) {
        out.mean_b = z.mean_b(idx);
        out.sd_b = z.sd_b(idx);
    }
    return out;
}

} // namespace detail

/// One run: optional mask evolution on `part.train`, full-length training on
/// the kept columns, evaluation on `part.test`. Test rows only enter at the
/// final prediction.
inline SeedRun run_once(const ExperimentConfig& cfg, const Partition& part, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedRun run;
    run.seed = seed;

    StreamBatch train_padded = make_batch(part.train, cfg.scenario);
    StreamBatch test_padded = make_batch(part.test, cfg.scenario);
    std::optional<ZScore> z;
    if (cfg.normalize) {
        z = ZScore::fit(train_padded);
        train_padded = z->apply(std::move(train_padded));
        test_padded = z->apply(std::move(test_padded));
    }

    TrainConfig tc = cfg.train;
    tc.init_seed = derive_seed({cfg.train.init_seed, seed});

    FeatureMask mask = FeatureMask::ones();
    if (cfg.ga) {
        GaConfig gc = *cfg.ga;
        gc.seed = derive_seed({cfg.ga->seed, seed});
        run.ga = evolve(train_padded, cfg.scenario, gc, tc);
        mask = run.ga->best_mask;
    }

    const auto cols = mask.selected();
    const auto topo = topology_for(cfg.scenario, long(cols.size()), tc);
    auto trained = train(topo, select_columns(train_padded, cols), tc);
    const auto preds = trained.network.predict(select_columns(test_padded, cols));
    std::vector<Label> truth;
    for (int l : test_padded.labels) truth.push_back(Label(l));
    run.confusion = confusion(preds, truth);
    run.report = report(run.confusion);

    run.checkpoint.scenario = cfg.scenario;
    run.checkpoint.mask = mask.to_string();
    if (z) run.checkpoint.normalization = detail::restrict(*z, cols, is_two_stream(cfg.scenario));
    run.checkpoint.network = std::move(trained.network);
    run.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

namespace detail {

/// Re-raises module errors with the run they came from.
template <class F>
auto with_context(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError(where + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

} // namespace detail

inline RunSummary run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
    validate(cfg);
    RunSummary summary;
    if (cfg.folds >= 2) {
        const auto parts = kfold(ds, std::size_t(cfg.folds), cfg.run_seeds.front());
        for (std::size_t f = 0; f < parts.size(); ++f) {
            summary.runs.push_back(detail::with_context("fold " + std::to_string(f), [&] {
                return run_once(cfg, parts[f], derive_seed({cfg.run_seeds.front(), f}));
            }));
        }
    } else {
        for (auto seed : cfg.run_seeds) {
            summary.runs.push_back(detail::with_context("run seed " + std::to_string(seed), [&] {
                return run_once(cfg, split(ds, {cfg.train_fraction, seed}), seed);
            }));
        }
    }
    summary.mean = detail::aggregate(summary.runs);
    return summary;
}

inline RunSummary run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    return run_experiment(cfg, load_source(cfg));
}

// ---------------------------------------------------------------------------
// Width/activation sweep
// ---------------------------------------------------------------------------

struct SweepTable {
    std::vector<int> hidden_units;
    std::vector<Activation> activations;
    std::vector<std::vector<double>> mean_accuracy; ///< [hidden][activation]
};

inline SweepTable sweep_baseline(const ExperimentConfig& cfg, const Dataset& ds,
                                 std::vector<int> hidden = {30, 40, 50, 60, 70, 80},
                                 std::vector<Activation> acts = {Activation::ReLU, Activation::Tanh,
                                                                 Activation::Sigmoid}) {
    for (int h : hidden) {
        if (h < 30 || h > 80 || h % 10 != 0) throw ValidationError("sweep hidden sizes must come from {30, 40, ..., 80}");
    }
    SweepTable t{hidden, acts, {}};
    for (int h : hidden) {
        auto& row = t.mean_accuracy.emplace_back();
        for (auto a : acts) {
            auto c = cfg;
            c.train.hidden_units = h;
            c.train.activation = a;
            row.push_back(run_experiment(c, ds).mean.accuracy);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline void write_metrics_row(std::ostream& os, const EvalReport& r) {
    os << format_metric(r.accuracy);
    for (const auto* m : {&r.per_class[0], &r.per_class[1], &r.macro}) {
        os << ',' << format_metric(m->precision) << ',' << format_metric(m->recall) << ',' << format_metric(m->f1);
    }
}

/// Per-run metrics plus a final `mean` row. Wall-clock time is deliberately absent.
inline void write_summary_csv(std::ostream& os, const RunSummary& s) {
    os << "run,seed,accuracy,precision_genuine,recall_genuine,f1_genuine,precision_posed,recall_posed,f1_posed,"
          "precision_macro,recall_macro,f1_macro,kept_features\n";
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
        const auto& r = s.runs[i];
        os << i << ',' << r.seed << ',';
        write_metrics_row(os, r.report);
        os << ',' << r.checkpoint.network.topology().input_dim << '\n';
    }
    os << "mean,,";
    write_metrics_row(os, s.mean);
    os << ",\n";
}

inline void print_sweep(std::ostream& os, const SweepTable& t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-6s", "n");
    os << buf;
    for (auto a : t.activations) {
        std::snprintf(buf, sizeof buf, " %9s", std::string(activation_name(a)).c_str());
        os << buf;
    }
    os << '\n';
    for (std::size_t i = 0; i < t.hidden_units.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-6d", t.hidden_units[i]);
        os << buf;
        for (double v : t.mean_accuracy[i]) {
            std::snprintf(buf, sizeof buf, " %9.2f", v);
            os << buf;
        }
        os << '\n';
    }
}

inline void write_sweep_csv(std::ostream& os, const SweepTable& t) {
    os << "hidden_units";
    for (auto a : t.activations) os << ',' << activation_name(a);
    os << '\n';
    for (std::size_t i = 0; i < t.hidden_units.size(); ++i) {
        os << t.hidden_units[i];
        for (double v : t.mean_accuracy[i]) os << ',' << format_metric(v);
        os << '\n';
    }
}

} // namespace gfs

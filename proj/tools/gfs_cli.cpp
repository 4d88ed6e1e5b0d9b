// Command-line front end: synthetic data generation, seeded training runs,
// genetic feature selection, the width/activation sweep and checkpoint scoring.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gfs/config.hpp>
#include <gfs/experiment.hpp>

namespace fs = std::filesystem;

namespace {

struct SynthFlags {
    std::optional<std::uint64_t> seed;
    std::optional<int> observers, videos;
    std::optional<double> bump_mm, noise_sd, blink_rate, noise_fraction, injected_noise_sd;

    void add(CLI::App* app) {
        app->add_option("--synth-seed", seed, "Synthetic generator seed");
        app->add_option("--observers", observers, "Synthetic observers");
        app->add_option("--videos", videos, "Synthetic videos per observer");
        app->add_option("--bump-mm", bump_mm, "Genuine dilation amplitude (mm)");
        app->add_option("--noise-sd", noise_sd, "Sensor noise sd (mm)");
        app->add_option("--blink-rate", blink_rate, "Blink onset probability per timestep");
        app->add_option("--noise-fraction", noise_fraction, "Fraction of timesteps replaced by pure noise");
        app->add_option("--injected-noise-sd", injected_noise_sd, "Sd of the injected noise (mm)");
    }

    void apply(gfs::SynthConfig& c) const {
        if (seed) c.seed = *seed;
        if (observers) c.n_observers = *observers;
        if (videos) c.n_videos = *videos;
        if (bump_mm) c.bump_mm = *bump_mm;
        if (noise_sd) c.noise_sd = *noise_sd;
        if (blink_rate) c.blink_rate = *blink_rate;
        if (noise_fraction) c.noise_fraction = *noise_fraction;
        if (injected_noise_sd) c.injected_noise_sd = *injected_noise_sd;
    }
};

struct ExperimentFlags {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::string> scenario, activation;
    std::optional<int> hidden, epochs, folds;
    std::optional<double> lr, weight_decay;
    std::vector<std::uint64_t> seeds;
    bool normalize = false;
    SynthFlags synth;

    void add(CLI::App* app) {
        app->add_option("--config", config, "JSON experiment config (flags override it)")->check(CLI::ExistingFile);
        app->add_option("--data", data, "Recordings CSV (default: synthetic data)")->check(CLI::ExistingFile);
        app->add_option("--out", out, "Directory for CSV, mask and checkpoint artifacts");
        app->add_option("--scenario", scenario, "left | right | left-right | left-leftdiff | right-rightdiff");
        app->add_option("--hidden", hidden, "Hidden units per stream");
        app->add_option("--activation", activation, "relu | tanh | sigmoid");
        app->add_option("--epochs", epochs, "Training epochs");
        app->add_option("--lr", lr, "Adam learning rate");
        app->add_option("--weight-decay", weight_decay, "Coupled L2 weight decay");
        app->add_option("--seed,--seeds", seeds, "Run seeds (comma separated)")->delimiter(',');
        app->add_option("--folds", folds, "Use k disjoint folds instead of seeded 80/20 splits");
        app->add_flag("--normalize", normalize, "Z-score features with training statistics");
        synth.add(app);
    }

    gfs::ExperimentConfig build() const {
        gfs::ExperimentConfig c;
        if (!config.empty()) c = gfs::load_config(config);
        if (!data.empty()) c.csv_path = data;
        synth.apply(c.synthetic);
        if (scenario) c.scenario = gfs::parse_scenario(*scenario);
        if (activation) c.train.activation = gfs::parse_activation(*activation);
        if (hidden) c.train.hidden_units = *hidden;
        if (epochs) c.train.epochs = *epochs;
        if (lr) c.train.learning_rate = *lr;
        if (weight_decay) c.train.weight_decay = *weight_decay;
        if (!seeds.empty()) c.run_seeds = seeds;
        if (folds) c.folds = *folds;
        if (normalize) c.normalize = true;
        return c;
    }
};

struct GaFlags {
    std::optional<int> generations, population, tournament_size, fitness_epochs;
    std::optional<double> mutation_rate;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> selection;
    std::optional<unsigned> threads;

    void add(CLI::App* app) {
        app->add_option("--generations", generations, "GA generations");
        app->add_option("--population", population, "Population size (odd)");
        app->add_option("--tournament-size", tournament_size, "Members per tournament group");
        app->add_option("--mutation-rate", mutation_rate, "Per-bit flip probability");
        app->add_option("--fitness-epochs", fitness_epochs, "Training epochs per fitness evaluation");
        app->add_option("--ga-seed", seed, "GA seed (combined with each run seed)");
        app->add_option("--selection", selection, "in-group | population-minmax");
        app->add_option("--threads", threads, "Parallel fitness evaluations (0 = all cores)");
    }

    void apply(gfs::ExperimentConfig& c) const {
        gfs::GaConfig g = c.ga.value_or(gfs::GaConfig{});
        if (population) g = gfs::with_population(g, *population);
        if (generations) g.generations = *generations;
        if (tournament_size) g.tournament_group_size = *tournament_size;
        if (mutation_rate) g.mutation_rate = *mutation_rate;
        if (fitness_epochs) g.fitness_epochs = *fitness_epochs;
        if (seed) g.seed = *seed;
        if (selection) g.weights = gfs::parse_selection(*selection);
        if (threads) g.threads = *threads;
        c.ga = g;
    }
};

std::ofstream open_out(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    const auto path = (fs::path(dir) / name).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw gfs::ValidationError("cannot write " + path);
    return os;
}

void emit_summary(const gfs::RunSummary& s, const std::string& out) {
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
        const auto& r = s.runs[i];
        std::cout << "run " << i << " seed " << r.seed << ": accuracy " << gfs::format_metric(r.report.accuracy)
                  << " %, features " << r.checkpoint.network.topology().input_dim << ", " << std::fixed
                  << std::setprecision(1) << r.elapsed_seconds << " s\n";
        std::cout.unsetf(std::ios::fixed);
    }
    std::cout << "\nMean over " << s.runs.size() << " runs\n";
    gfs::print_table(std::cout, s.mean);
    if (out.empty()) return;

    auto summary = open_out(out, "summary.csv");
    gfs::write_summary_csv(summary, s);
    auto rep = open_out(out, "report.csv");
    gfs::write_report_csv(rep, s.mean);
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
        const auto& r = s.runs[i];
        const auto tag = "run" + std::to_string(i);
        auto ck = open_out(out, "model_" + tag + ".ckpt");
        gfs::write_checkpoint(ck, r.checkpoint);
        auto mask = open_out(out, "mask_" + tag + ".txt");
        mask << r.checkpoint.mask << '\n';
        if (r.ga) {
            auto hist = open_out(out, "ga_history_" + tag + ".csv");
            gfs::write_history_csv(hist, r.ga->history);
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Genetic feature selection with single- and two-stream pupillary classifiers"};
    app.require_subcommand(1);

    auto* generate = app.add_subcommand("generate", "Write a synthetic recordings CSV");
    std::string gen_out, gen_config;
    SynthFlags gen_synth;
    generate->add_option("--out", gen_out, "Output CSV path")->required();
    generate->add_option("--config", gen_config, "JSON config supplying data.synthetic")->check(CLI::ExistingFile);
    gen_synth.add(generate);

    auto* train = app.add_subcommand("train", "Train and evaluate over the run seeds");
    ExperimentFlags train_flags;
    train_flags.add(train);

    auto* gfs_cmd = app.add_subcommand("gfs", "Evolve a feature mask per run, then train and evaluate");
    ExperimentFlags gfs_flags;
    GaFlags ga_flags;
    gfs_flags.add(gfs_cmd);
    ga_flags.add(gfs_cmd);

    auto* sweep = app.add_subcommand("sweep", "Mean test accuracy over hidden sizes x activations");
    ExperimentFlags sweep_flags;
    std::vector<int> sweep_hidden{30, 40, 50, 60, 70, 80};
    std::vector<std::string> sweep_acts{"relu", "tanh", "sigmoid"};
    sweep_flags.add(sweep);
    sweep->add_option("--hidden-list", sweep_hidden, "Hidden sizes to sweep")->delimiter(',');
    sweep->add_option("--activations", sweep_acts, "Activations to sweep")->delimiter(',');

    auto* rep = app.add_subcommand("report", "Score a checkpoint on a recordings CSV");
    std::string rep_ckpt, rep_data, rep_out;
    rep->add_option("--checkpoint", rep_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
    rep->add_option("--data", rep_data, "Recordings CSV")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", rep_out, "Directory for report.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*generate) {
            gfs::ExperimentConfig c;
            if (!gen_config.empty()) c = gfs::load_config(gen_config);
            gen_synth.apply(c.synthetic);
            const auto ds = gfs::generate_synthetic(c.synthetic);
            const auto parent = fs::path(gen_out).parent_path();
            if (!parent.empty()) fs::create_directories(parent);
            gfs::write_dataset(gen_out, ds);
            std::cout << "wrote " << ds.size() << " samples to " << gen_out << '\n';
        } else if (*train) {
            auto c = train_flags.build();
            emit_summary(gfs::run_experiment(c), train_flags.out);
        } else if (*gfs_cmd) {
            auto c = gfs_flags.build();
            ga_flags.apply(c);
            emit_summary(gfs::run_experiment(c), gfs_flags.out);
        } else if (*sweep) {
            auto c = sweep_flags.build();
            std::vector<gfs::Activation> acts;
            for (const auto& a : sweep_acts) acts.push_back(gfs::parse_activation(a));
            const auto table = gfs::sweep_baseline(c, gfs::load_source(c), sweep_hidden, acts);
            std::cout << "Mean test accuracy (%)\n";
            gfs::print_sweep(std::cout, table);
            if (!sweep_flags.out.empty()) {
                auto os = open_out(sweep_flags.out, "sweep.csv");
                gfs::write_sweep_csv(os, table);
            }
        } else if (*rep) {
            std::ifstream is(rep_ckpt);
            const auto ck = gfs::read_checkpoint(is);
            const auto ds = gfs::load_dataset(rep_data);
            const auto batch = ck.prepare(ds);
            const auto preds = ck.network.predict(batch);
            std::vector<gfs::Label> truth;
            for (int l : batch.labels) truth.push_back(gfs::Label(l));
            const auto r = gfs::report(gfs::confusion(preds, truth));
            gfs::print_table(std::cout, r);
            if (!rep_out.empty()) {
                auto os = open_out(rep_out, "report.csv");
                gfs::write_report_csv(os, r);
            }
        }
    } catch (const gfs::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const gfs::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#pragma once

/// @file config.hpp
/// @brief JSON experiment configuration. Every key is optional; absent keys
/// keep the defaults of ExperimentConfig. Unknown keys are rejected.
///
/// {
///   "data": {"csv": "recordings.csv"}             // or
///   "data": {"synthetic": {"n_observers": 22, "n_videos": 20, "min_length": 60,
///            "max_length": 186, "signal_begin": 10, "signal_end": 31,
///            "base_mm": 3.5, "observer_spread_mm": 0.7, "bump_mm": 0.8,
///            "noise_sd": 0.08, "blink_rate": 0.001, "eye_correlation": 0.9,
///            "noise_fraction": 0.0, "injected_noise_sd": 4.0, "seed": 1}},
///   "scenario": "left",
///   "train": {"learning_rate": 1e-4, "weight_decay": 1e-5, "beta1": 0.9,
///             "beta2": 0.999, "epsilon": 1e-8, "epochs": 1000,
///             "activation": "relu", "hidden_units": 60, "init_seed": 0},
///   "ga": {"population_size": 21, "generations": 10, "tournament_group_size": 9,
///          "mutation_rate": 0.001, "fitness_train_fraction": 0.8,
///          "fitness_epochs": 300, "seed": 0, "selection": "in-group", "threads": 1},
///   "run_seeds": [1000, 2000, 3000, 4000, 5000],
///   "normalize": false,
///   "train_fraction": 0.8,
///   "folds": 0
/// }

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "error.hpp"
#include "experiment.hpp"

namespace gfs {

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ValidationError(std::string(where) + " must be an object");
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (auto key : keys) ok = ok || k == key;
        if (!ok) throw ValidationError("unknown key '" + k + "' in " + std::string(where));
    }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace detail

inline SelectionWeights parse_selection(std::string_view s) {
    if (s == "in-group") return SelectionWeights::InGroup;
    if (s == "population-minmax") return SelectionWeights::PopulationMinMax;
    throw ValidationError("unknown selection mode '" + std::string(s) + "'");
}

inline void apply_json(const nlohmann::json& j, SynthConfig& c) {
    detail::reject_unknown(j, "data.synthetic",
                           {"n_observers", "n_videos", "min_length", "max_length", "signal_begin", "signal_end",
                            "base_mm", "observer_spread_mm", "bump_mm", "noise_sd", "blink_rate", "eye_correlation",
                            "noise_fraction", "injected_noise_sd", "seed"});
    detail::read(j, "n_observers", c.n_observers);
    detail::read(j, "n_videos", c.n_videos);
    detail::read(j, "min_length", c.min_length);
    detail::read(j, "max_length", c.max_length);
    detail::read(j, "signal_begin", c.signal_begin);
    detail::read(j, "signal_end", c.signal_end);
    detail::read(j, "base_mm", c.base_mm);
    detail::read(j, "observer_spread_mm", c.observer_spread_mm);
    detail::read(j, "bump_mm", c.bump_mm);
    detail::read(j, "noise_sd", c.noise_sd);
    detail::read(j, "blink_rate", c.blink_rate);
    detail::read(j, "eye_correlation", c.eye_correlation);
    detail::read(j, "noise_fraction", c.noise_fraction);
    detail::read(j, "injected_noise_sd", c.injected_noise_sd);
    detail::read(j, "seed", c.seed);
}

inline void apply_json(const nlohmann::json& j, TrainConfig& c) {
    detail::reject_unknown(j, "train",
                           {"learning_rate", "weight_decay", "beta1", "beta2", "epsilon", "epochs", "activation",
                            "hidden_units", "init_seed"});
    detail::read(j, "learning_rate", c.learning_rate);
    detail::read(j, "weight_decay", c.weight_decay);
    detail::read(j, "beta1", c.beta1);
    detail::read(j, "beta2", c.beta2);
    detail::read(j, "epsilon", c.epsilon);
    detail::read(j, "epochs", c.epochs);
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    detail::read(j, "hidden_units", c.hidden_units);
    detail::read(j, "init_seed", c.init_seed);
}

inline void apply_json(const nlohmann::json& j, GaConfig& c) {
    detail::reject_unknown(j, "ga",
                           {"population_size", "generations", "tournament_group_size", "mutation_rate",
                            "fitness_train_fraction", "fitness_epochs", "seed", "selection", "threads"});
    if (j.contains("population_size")) c = with_population(c, j.at("population_size").get<int>());
    detail::read(j, "generations", c.generations);
    detail::read(j, "tournament_group_size", c.tournament_group_size);
    detail::read(j, "mutation_rate", c.mutation_rate);
    detail::read(j, "fitness_train_fraction", c.fitness_train_fraction);
    detail::read(j, "fitness_epochs", c.fitness_epochs);
    detail::read(j, "seed", c.seed);
    if (j.contains("selection")) c.weights = parse_selection(j.at("selection").get<std::string>());
    detail::read(j, "threads", c.threads);
}

inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
    detail::reject_unknown(j, "config",
                           {"data", "scenario", "train", "ga", "run_seeds", "normalize", "train_fraction", "folds"});
    try {
        if (j.contains("data")) {
            const auto& d = j.at("data");
            detail::reject_unknown(d, "data", {"csv", "synthetic"});
            if (d.contains("csv") && d.contains("synthetic")) throw ValidationError("data: give either csv or synthetic");
            if (d.contains("csv")) c.csv_path = d.at("csv").get<std::string>();
            if (d.contains("synthetic")) {
                c.csv_path.clear();
                apply_json(d.at("synthetic"), c.synthetic);
            }
        }
        if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario").get<std::string>());
        if (j.contains("train")) apply_json(j.at("train"), c.train);
        if (j.contains("ga")) {
            if (j.at("ga").is_null()) {
                c.ga.reset();
            } else {
                GaConfig g = c.ga.value_or(GaConfig{});
                apply_json(j.at("ga"), g);
                c.ga = g;
            }
        }
        detail::read(j, "run_seeds", c.run_seeds);
        detail::read(j, "normalize", c.normalize);
        detail::read(j, "train_fraction", c.train_fraction);
        detail::read(j, "folds", c.folds);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
    apply_json(j, base);
    return base;
}

} // namespace gfs

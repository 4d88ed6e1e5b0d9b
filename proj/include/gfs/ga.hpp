#pragma once

/// @file ga.hpp
/// @brief Genetic feature selection over padded timestep positions.
///
/// A chromosome is a bit mask over the 186 padded positions. Its fitness is
/// the validation accuracy of a network trained on the kept positions only, so
/// the mask also fixes the network input width. Each generation keeps the best
/// chromosome and breeds the rest from tournament groups: members are drawn
/// at random (a chromosome may sit in several groups), two parents are picked
/// inside a group with probability proportional to fitness, and a one-point
/// crossover followed by bit-flip mutation yields two offspring.

#include <algorithm>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "models.hpp"
#include "nn.hpp"
#include "random.hpp"

namespace gfs {

template <std::size_t N>
class BasicMask {
public:
    static constexpr std::size_t length = N;

    BasicMask() = default;
    explicit BasicMask(const std::bitset<N>& bits) : bits_(bits) {}

    /// Parses a string of N '0'/'1' characters, position 0 first.
    static BasicMask from_string(std::string_view s) {
        if (s.size() != N || s.find_first_not_of("01") != std::string_view::npos) {
            throw ValidationError("mask must be " + std::to_string(N) + " characters of 0/1");
        }
        BasicMask m;
        for (std::size_t i = 0; i < N; ++i) m.bits_[i] = s[i] == '1';
        return m;
    }

    static BasicMask ones() { return BasicMask(std::bitset<N>().set()); }

    bool operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, bool v = true) { bits_[i] = v; }
    void flip(std::size_t i) { bits_.flip(i); }
    std::size_t popcount() const noexcept { return bits_.count(); }
    const std::bitset<N>& bits() const noexcept { return bits_; }

    std::vector<std::size_t> selected() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < N; ++i)
            if (bits_[i]) out.push_back(i);
        return out;
    }

    std::string to_string() const {
        std::string s(N, '0');
        for (std::size_t i = 0; i < N; ++i)
            if (bits_[i]) s[i] = '1';
        return s;
    }

    /// Packs positions 4k..4k+3 into hex digit k, position 4k in the high bit.
    std::string to_hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (std::size_t k = 0; k < N; k += 4) {
            unsigned nib = 0;
            for (std::size_t j = 0; j < 4; ++j) nib = (nib << 1) | unsigned(k + j < N && bits_[k + j]);
            out.push_back(digits[nib]);
        }
        return out;
    }

    bool operator==(const BasicMask&) const = default;

private:
    std::bitset<N> bits_;
};

using FeatureMask = BasicMask<kFeatureLength>;

/// How fitness values are turned into in-group selection weights.
enum class SelectionWeights {
    InGroup,           ///< raw fitness, normalized within the tournament group
    PopulationMinMax,  ///< (f - min) / (max - min) over the whole population first
};

struct GaConfig {
    int population_size = 21;
    int generations = 10;
    int tournament_group_count = 10;
    int tournament_group_size = 9;
    double mutation_rate = 0.001;
    double fitness_train_fraction = 0.8;
    int fitness_epochs = 300;
    std::uint64_t seed = 0;
    SelectionWeights weights = SelectionWeights::InGroup;
    unsigned threads = 1; ///< 0 means hardware concurrency
};

inline void validate(const GaConfig& c) {
    if (c.population_size < 3 || c.population_size % 2 == 0) throw ValidationError("population_size must be odd and >= 3");
    if (c.population_size != 2 * c.tournament_group_count + 1) {
        throw ValidationError("population_size must equal 2 * tournament_group_count + 1");
    }
    if (c.tournament_group_size < 2 || c.tournament_group_size > c.population_size) {
        throw ValidationError("tournament_group_size must lie in [2, population_size]");
    }
    if (c.generations < 1) throw ValidationError("generations must be >= 1");
    if (!(c.mutation_rate >= 0 && c.mutation_rate <= 1)) throw ValidationError("mutation_rate must lie in [0, 1]");
    if (!(c.fitness_train_fraction > 0 && c.fitness_train_fraction < 1)) {
        throw ValidationError("fitness_train_fraction must lie in (0, 1)");
    }
    if (c.fitness_epochs < 1) throw ValidationError("fitness_epochs must be >= 1");
}

/// Population size as n + 1 offspring-plus-elite, with n = 2 * groups.
inline GaConfig with_population(GaConfig c, int population_size) {
    if (population_size < 3 || population_size % 2 == 0) {
        throw ValidationError("population_size must be odd and >= 3 (elite plus two offspring per group)");
    }
    c.population_size = population_size;
    c.tournament_group_count = (population_size - 1) / 2;
    return c;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// An empty mask gets one uniformly chosen bit; anything else is returned unchanged.
template <std::size_t N>
BasicMask<N> repair(BasicMask<N> m, Rng& rng) {
    if (m.popcount() == 0) m.set(std::uniform_int_distribution<std::size_t>(0, N - 1)(rng));
    return m;
}

/// Flips each bit independently with probability rate, then repairs.
template <std::size_t N>
BasicMask<N> mutate(BasicMask<N> m, double rate, Rng& rng) {
    if (!(rate >= 0 && rate <= 1)) throw ValidationError("mutation rate must lie in [0, 1]");
    std::bernoulli_distribution flip(rate);
    for (std::size_t i = 0; i < N; ++i)
        if (flip(rng)) m.flip(i);
    return repair(m, rng);
}

/// child1 = a[0, point) + b[point, N); child2 = b[0, point) + a[point, N).
template <std::size_t N>
std::pair<BasicMask<N>, BasicMask<N>> crossover(const BasicMask<N>& a, const BasicMask<N>& b, std::size_t point) {
    if (point < 1 || point > N - 1) {
        throw ValidationError("crossover point " + std::to_string(point) + " outside [1, " + std::to_string(N - 1) + "]");
    }
    BasicMask<N> c1 = a, c2 = b;
    for (std::size_t i = point; i < N; ++i) {
        c1.set(i, b[i]);
        c2.set(i, a[i]);
    }
    return {c1, c2};
}

/// Population of cfg.population_size masks with fair-coin bits, repaired.
template <std::size_t N = kFeatureLength>
std::vector<BasicMask<N>> init_population(const GaConfig& cfg) {
    validate(cfg);
    auto rng = make_rng({cfg.seed, 0x706f70ULL});
    std::bernoulli_distribution coin(0.5);
    std::vector<BasicMask<N>> pop(std::size_t(cfg.population_size));
    for (auto& m : pop) {
        for (std::size_t i = 0; i < N; ++i) m.set(i, coin(rng));
        m = repair(m, rng);
    }
    return pop;
}

/// Picks two distinct group members, each draw proportional to weight among
/// the members not yet chosen; uniform when the remaining weights are all zero.
inline std::pair<std::size_t, std::size_t> select_parents(std::span<const double> weights, Rng& rng) {
    if (weights.size() < 2) throw ValidationError("tournament group needs at least 2 members");
    for (double w : weights) {
        if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("selection weights must be finite and non-negative");
    }
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    auto draw = [&](std::size_t exclude) {
        double total = 0;
        std::size_t last_positive = none;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (i == exclude) continue;
            total += weights[i];
            if (weights[i] > 0) last_positive = i;
        }
        if (total <= 0) {
            if (exclude == none) return std::uniform_int_distribution<std::size_t>(0, weights.size() - 1)(rng);
            const auto k = std::uniform_int_distribution<std::size_t>(0, weights.size() - 2)(rng);
            return k >= exclude ? k + 1 : k;
        }
        const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        double cum = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (i == exclude || weights[i] <= 0) continue;
            cum += weights[i];
            if (u < cum) return i;
        }
        return last_positive;
    };
    const auto a = draw(none);
    const auto b = draw(a);
    return {a, b};
}

namespace detail {

inline std::vector<double> selection_weights(std::span<const double> fitness, SelectionWeights mode) {
    std::vector<double> w(fitness.begin(), fitness.end());
    if (mode == SelectionWeights::PopulationMinMax) {
        const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
        const double min = *lo, span = *hi - *lo;
        for (auto& x : w) x = span > 0 ? (x - min) / span : 0.0;
    }
    return w;
}

inline std::size_t argmax(std::span<const double> v) {
    return std::size_t(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace detail

/// Elite first, then two offspring from each tournament group.
template <std::size_t N>
std::vector<BasicMask<N>> next_generation(std::span<const BasicMask<N>> pop, std::span<const double> fitness,
                                          const GaConfig& cfg, Rng& rng) {
    if (pop.size() != fitness.size() || pop.size() != std::size_t(cfg.population_size)) {
        throw ValidationError("population and fitness sizes disagree with population_size");
    }
    const auto weights = detail::selection_weights(fitness, cfg.weights);
    std::vector<BasicMask<N>> out;
    out.reserve(pop.size());
    out.push_back(pop[detail::argmax(fitness)]);

    std::vector<std::size_t> order(pop.size());
    std::vector<double> group_weights(std::size_t(cfg.tournament_group_size));
    std::uniform_int_distribution<std::size_t> cut(1, N - 1);
    for (int g = 0; g < cfg.tournament_group_count; ++g) {
        // Partial Fisher-Yates: distinct members within one group.
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = 0; k < group_weights.size(); ++k) {
            std::swap(order[k], order[std::uniform_int_distribution<std::size_t>(k, order.size() - 1)(rng)]);
            group_weights[k] = weights[order[k]];
        }
        const auto [i, j] = select_parents(group_weights, rng);
        auto [c1, c2] = crossover(pop[order[i]], pop[order[j]], cut(rng));
        out.push_back(mutate(c1, cfg.mutation_rate, rng));
        out.push_back(mutate(c2, cfg.mutation_rate, rng));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitness
// ---------------------------------------------------------------------------

/// Fixed fitness split of the padded training features.
struct FitnessData {
    StreamBatch train;
    StreamBatch validation;
    Scenario scenario = Scenario::LeftOnly;

    static FitnessData from_batch(const StreamBatch& padded, Scenario scenario, const GaConfig& cfg) {
        const auto n = padded.size();
        const auto n_train = static_cast<std::size_t>(std::llround(cfg.fitness_train_fraction * double(n)));
        if (n_train == 0 || n_train >= n) throw ValidationError("fitness split leaves a partition empty");
        auto idx = detail::shuffled_indices(n, derive_seed({cfg.seed, 0x666974ULL}));
        std::span<const std::size_t> all(idx);
        return {select_rows(padded, all.first(n_train)), select_rows(padded, all.subspan(n_train)), scenario};
    }
};

/// Validation accuracy in [0, 1] of a network trained on the masked columns.
inline double fitness(const FeatureMask& mask, const FitnessData& data, const TrainConfig& train_cfg) {
    const auto cols = mask.selected();
    if (cols.empty()) throw ValidationError("fitness of an empty mask");
    const auto topo = topology_for(data.scenario, long(cols.size()), train_cfg);
    auto trained = train(topo, select_columns(data.train, cols), train_cfg);
    const auto preds = trained.network.predict(select_columns(data.validation, cols));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += int(preds[i]) == data.validation.labels[i];
    return double(hit) / double(preds.size());
}

/// Splits train_data by cfg.fitness_train_fraction (seeded by cfg.seed), trains
/// for cfg.fitness_epochs and scores the held-out part.
inline double fitness(const FeatureMask& mask, const Dataset& train_data, Scenario scenario, const GaConfig& cfg,
                      TrainConfig train_cfg) {
    if (train_data.empty()) throw ValidationError("fitness: empty training data");
    train_cfg.epochs = cfg.fitness_epochs;
    return fitness(mask, FitnessData::from_batch(make_batch(train_data, scenario), scenario, cfg), train_cfg);
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

struct GenerationRecord {
    int generation = 0;
    double best_fitness = 0;
    double mean_fitness = 0;
    FeatureMask best_mask;
    std::vector<FeatureMask> population;
    std::vector<double> fitness;
};

using GaHistory = std::vector<GenerationRecord>;

struct GaResult {
    FeatureMask best_mask;
    double best_fitness = 0;
    GaHistory history;
};

namespace detail {

/// Runs f(i) for i in [0, n) on up to `threads` workers; results land by index.
template <class F>
std::vector<double> parallel_map(std::size_t n, unsigned threads, F&& f) {
    std::vector<double> out(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < threads; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += threads) out[i] = f(i);
        }));
    }
    for (auto& j : jobs) j.get();
    return out;
}

} // namespace detail

/// Evolves a mask on padded training features. Generation 0 is the initial
/// population; each later generation is bred from the previous one. The elite
/// keeps its fitness; every other chromosome is trained with an init seed
/// derived from (train_cfg.init_seed, cfg.seed, generation, index).
inline GaResult evolve(const StreamBatch& padded_train, Scenario scenario, const GaConfig& cfg, TrainConfig train_cfg) {
    validate(cfg);
    validate(train_cfg);
    train_cfg.epochs = cfg.fitness_epochs;
    const auto data = FitnessData::from_batch(padded_train, scenario, cfg);
    auto rng = make_rng({cfg.seed, 0x65766fULL});

    auto pop = init_population(cfg);
    std::vector<double> fit;
    GaResult result;
    for (int gen = 0; gen < cfg.generations; ++gen) {
        const bool carry_elite = gen > 0;
        const double elite_fitness = carry_elite ? result.best_fitness : 0.0;
        fit = detail::parallel_map(pop.size(), cfg.threads, [&](std::size_t i) {
            if (carry_elite && i == 0) return elite_fitness;
            auto tc = train_cfg;
            tc.init_seed = derive_seed({train_cfg.init_seed, cfg.seed, std::uint64_t(gen), std::uint64_t(i)});
            return fitness(pop[i], data, tc);
        });

        const auto best = detail::argmax(fit);
        GenerationRecord rec;
        rec.generation = gen;
        rec.best_fitness = fit[best];
        rec.mean_fitness = std::accumulate(fit.begin(), fit.end(), 0.0) / double(fit.size());
        rec.best_mask = pop[best];
        rec.population = pop;
        rec.fitness = fit;
        if (gen == 0 || fit[best] > result.best_fitness) {
            result.best_fitness = fit[best];
            result.best_mask = pop[best];
        }
        result.history.push_back(std::move(rec));

        if (gen + 1 < cfg.generations) pop = next_generation<kFeatureLength>(pop, fit, cfg, rng);
    }
    return result;
}

inline GaResult evolve(const Dataset& train_data, Scenario scenario, const GaConfig& cfg, const TrainConfig& train_cfg) {
    return evolve(make_batch(train_data, scenario), scenario, cfg, train_cfg);
}

inline void write_history_csv(std::ostream& os, const GaHistory& history) {
    os << "generation,best_fitness,mean_fitness,best_mask_hex\n";
    for (const auto& r : history) {
        os << r.generation << ',' << detail::shortest(r.best_fitness) << ',' << detail::shortest(r.mean_fitness) << ','
           << r.best_mask.to_hex() << '\n';
    }
}

} // namespace gfs

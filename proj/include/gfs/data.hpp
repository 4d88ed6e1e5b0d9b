#pragma once

/// @file data.hpp
/// @brief Pupillary time-series samples: CSV ingestion, synthetic generation,
/// zero padding, first differences and seeded train/test partitioning.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace gfs {

inline constexpr std::size_t kFeatureLength = 186;
inline constexpr std::size_t kMinSequenceLength = 60;
inline constexpr double kSamplingRateHz = 60.0;

enum class Label : int { Genuine = 0, Posed = 1 };

inline constexpr std::string_view label_name(Label l) {
    return l == Label::Genuine ? "genuine" : "posed";
}

inline Label parse_label(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "genuine") return Label::Genuine;
    if (lower == "posed") return Label::Posed;
    throw ValidationError("unknown label '" + std::string(text) + "'");
}

/// One observer watching one video: per-eye pupil diameters in millimetres.
struct Sample {
    std::string sample_id;
    int observer_id = 0;
    int video_id = 0;
    std::vector<double> left;
    std::vector<double> right;
    Label label = Label::Genuine;

    std::size_t length() const noexcept { return left.size(); }

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    std::vector<Sample> samples;
    double sampling_rate = kSamplingRateHz;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    bool operator==(const Dataset&) const = default;
};

inline void validate(const Sample& s) {
    const auto& id = s.sample_id;
    if (s.left.size() != s.right.size()) {
        throw ValidationError("sample " + id + ": left/right length mismatch (" +
                              std::to_string(s.left.size()) + " vs " +
                              std::to_string(s.right.size()) + ")");
    }
    if (s.length() < kMinSequenceLength || s.length() > kFeatureLength) {
        throw ValidationError("sample " + id + ": length " + std::to_string(s.length()) +
                              " outside [60, 186]");
    }
    auto bad = [](double x) { return !std::isfinite(x) || x < 0.0; };
    if (std::any_of(s.left.begin(), s.left.end(), bad) ||
        std::any_of(s.right.begin(), s.right.end(), bad)) {
        throw ValidationError("sample " + id + ": diameters must be finite and non-negative");
    }
}

inline void validate(const Dataset& ds) {
    std::unordered_set<std::string> ids;
    for (const auto& s : ds.samples) {
        validate(s);
        if (!ids.insert(s.sample_id).second) {
            throw ValidationError("duplicate sample_id " + s.sample_id);
        }
    }
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.sampling_rate = ds.sampling_rate;
    out.samples.reserve(indices.size());
    for (auto i : indices) out.samples.push_back(ds.samples.at(i));
    return out;
}

// ---------------------------------------------------------------------------
// Feature construction
// ---------------------------------------------------------------------------

/// Fixed-length vector whose tail past valid_len is exactly zero.
struct FeatureVector {
    std::vector<double> values;
    std::size_t valid_len = 0;

    bool operator==(const FeatureVector&) const = default;
};

/// Copies seq into the prefix of a zero vector of length target_len.
inline FeatureVector pad(std::span<const double> seq, std::size_t target_len = kFeatureLength) {
    if (seq.size() > target_len) {
        throw ValidationError("sequence of length " + std::to_string(seq.size()) +
                              " exceeds padding target " + std::to_string(target_len));
    }
    FeatureVector fv;
    fv.values.assign(target_len, 0.0);
    std::copy(seq.begin(), seq.end(), fv.values.begin());
    fv.valid_len = seq.size();
    return fv;
}

/// out[0] = 0, out[t] = seq[t] - seq[t-1]. Output length equals input length.
inline std::vector<double> differences(std::span<const double> seq) {
    if (seq.empty()) throw ValidationError("differences of an empty sequence");
    std::vector<double> out(seq.size(), 0.0);
    for (std::size_t t = 1; t < seq.size(); ++t) out[t] = seq[t] - seq[t - 1];
    return out;
}

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct Partition {
    Dataset train;
    Dataset test;
};

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng({seed, 0x73706c6974ULL});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

inline void require_both_labels(const Dataset& ds) {
    bool g = false, p = false;
    for (const auto& s : ds.samples) (s.label == Label::Genuine ? g : p) = true;
    if (!g || !p) throw ValidationError("dataset must contain both genuine and posed samples");
}

} // namespace detail

/// Shuffles ds and places round(train_fraction * N) samples in the training part.
inline Partition split(const Dataset& ds, const SplitSpec& spec) {
    if (ds.empty()) throw ValidationError("cannot split an empty dataset");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ValidationError("train_fraction must lie in (0, 1)");
    }
    detail::require_both_labels(ds);
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * double(n)));
    if (n_train == 0 || n_train >= n) {
        throw ValidationError("split of " + std::to_string(n) + " samples at fraction " +
                              std::to_string(spec.train_fraction) + " leaves a partition empty");
    }
    auto idx = detail::shuffled_indices(n, spec.seed);
    std::span<const std::size_t> all(idx);
    return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

/// Disjoint k-fold partitions of one seeded shuffle; fold i is the test part of entry i.
inline std::vector<Partition> kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > ds.size()) throw ValidationError("fold count must lie in [2, N]");
    detail::require_both_labels(ds);
    auto idx = detail::shuffled_indices(ds.size(), seed);
    std::vector<Partition> folds;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t lo = f * ds.size() / k;
        const std::size_t hi = (f + 1) * ds.size() / k;
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i >= lo && i < hi ? test_idx : train_idx).push_back(idx[i]);
        }
        folds.push_back({subset(ds, train_idx), subset(ds, test_idx)});
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

/// Parameters of the synthetic stand-in for the observer recordings.
///
/// Each observer has a resting diameter; each recording adds a slow AR(1)
/// drift, white sensor noise and blink dropouts. Genuine recordings carry a
/// smooth dilation bump over [signal_begin, signal_end) on both eyes, scaled by
/// eye_correlation on the right eye. With noise_fraction > 0 a fixed set of
/// timesteps outside the signal window is overwritten by label-independent
/// noise in every recording.
struct SynthConfig {
    int n_observers = 22;
    int n_videos = 20;
    std::size_t min_length = 60;
    std::size_t max_length = 186;
    std::size_t signal_begin = 10;
    std::size_t signal_end = 31;
    double base_mm = 3.5;
    double observer_spread_mm = 0.7;
    double bump_mm = 0.8;
    double noise_sd = 0.08;
    double blink_rate = 0.001;
    double eye_correlation = 0.9;
    double noise_fraction = 0.0;
    double injected_noise_sd = 4.0;
    std::uint64_t seed = 1;
};

inline void validate(const SynthConfig& c) {
    if (c.n_observers < 1 || c.n_videos < 2) throw ValidationError("need >= 1 observer and >= 2 videos");
    if (c.min_length < kMinSequenceLength || c.max_length > kFeatureLength || c.min_length > c.max_length) {
        throw ValidationError("length range must lie within [60, 186]");
    }
    if (c.signal_begin >= c.signal_end || c.signal_end > c.min_length) {
        throw ValidationError("signal window must be a non-empty range inside [0, min_length)");
    }
    if (c.noise_sd < 0 || c.bump_mm < 0 || c.injected_noise_sd < 0 || c.observer_spread_mm < 0) {
        throw ValidationError("negative magnitude");
    }
    if (c.base_mm - c.observer_spread_mm <= 0) throw ValidationError("resting diameter must stay positive");
    if (c.blink_rate < 0 || c.blink_rate > 1) throw ValidationError("blink_rate must lie in [0, 1]");
    if (c.eye_correlation < 0 || c.eye_correlation > 1) throw ValidationError("eye_correlation must lie in [0, 1]");
    if (c.noise_fraction < 0 || c.noise_fraction > 1) throw ValidationError("noise_fraction must lie in [0, 1]");
}

/// Dilation added to genuine recordings at timestep t (zero outside the window).
inline double signal_bump(const SynthConfig& c, std::size_t t) {
    if (t < c.signal_begin || t >= c.signal_end) return 0.0;
    const double width = double(c.signal_end - c.signal_begin);
    const double s = std::sin(std::numbers::pi * (double(t - c.signal_begin) + 1.0) / (width + 1.0));
    return c.bump_mm * std::sqrt(s);
}

/// Timesteps overwritten by pure noise: round(noise_fraction * 186) positions
/// drawn outside the signal window.
inline std::vector<std::size_t> noise_positions(const SynthConfig& c) {
    std::vector<std::size_t> candidates;
    for (std::size_t t = 0; t < kFeatureLength; ++t) {
        if (t < c.signal_begin || t >= c.signal_end) candidates.push_back(t);
    }
    const auto count = static_cast<std::size_t>(std::llround(c.noise_fraction * double(kFeatureLength)));
    if (count > candidates.size()) throw ValidationError("noise_fraction leaves too few positions outside the signal window");
    auto rng = make_rng({c.seed, 0x6e6f697365ULL});
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(count);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

inline Dataset generate_synthetic(const SynthConfig& c) {
    validate(c);
    const auto noisy = noise_positions(c);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Dataset ds;
    ds.samples.reserve(std::size_t(c.n_observers) * std::size_t(c.n_videos));
    for (int o = 0; o < c.n_observers; ++o) {
        auto orng = make_rng({c.seed, 1, std::uint64_t(o)});
        const double base = c.base_mm + c.observer_spread_mm * (2.0 * uni(orng) - 1.0);
        const double right_offset = 0.1 * unit(orng);

        for (int v = 0; v < c.n_videos; ++v) {
            auto rng = make_rng({c.seed, 2, std::uint64_t(o), std::uint64_t(v)});
            Sample s;
            s.sample_id = "o" + std::to_string(o) + "_v" + std::to_string(v);
            s.observer_id = o;
            s.video_id = v;
            s.label = v % 2 == 0 ? Label::Genuine : Label::Posed;
            const bool genuine = s.label == Label::Genuine;
            const std::size_t len =
                std::uniform_int_distribution<std::size_t>(c.min_length, c.max_length)(rng);
            s.left.resize(len);
            s.right.resize(len);

            const double rho = c.eye_correlation;
            const double indep = std::sqrt(1.0 - rho * rho);
            double drift = 0.0, drift_r = 0.0;
            for (std::size_t t = 0; t < len; ++t) {
                drift = 0.9 * drift + c.noise_sd * unit(rng);
                drift_r = 0.9 * drift_r + c.noise_sd * unit(rng);
                const double bump = genuine ? signal_bump(c, t) : 0.0;
                s.left[t] = base + drift + c.noise_sd * unit(rng) + bump;
                s.right[t] = base + right_offset + rho * drift + indep * drift_r +
                             c.noise_sd * unit(rng) + rho * bump;
            }

            // Blinks: both eyes drop to near zero for 3-8 samples.
            std::uniform_int_distribution<std::size_t> blink_len(3, 8);
            for (std::size_t t = 0; t < len; ++t) {
                if (uni(rng) >= c.blink_rate) continue;
                const std::size_t end = std::min(len, t + blink_len(rng));
                for (; t < end; ++t) {
                    s.left[t] = 0.01 + 0.04 * uni(rng);
                    s.right[t] = 0.01 + 0.04 * uni(rng);
                }
            }

            for (auto t : noisy) {
                if (t >= len) break;
                s.left[t] = std::max(0.01, base + c.injected_noise_sd * unit(rng));
                s.right[t] = std::max(0.01, base + c.injected_noise_sd * unit(rng));
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader = "sample_id,observer_id,video_id,t,left_mm,right_mm,label";

namespace detail {

inline std::string shortest(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
    field = trim(field);
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(line, std::string("cannot parse ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

} // namespace detail

inline void write_dataset(std::ostream& os, const Dataset& ds) {
    os << kCsvHeader << '\n';
    for (const auto& s : ds.samples) {
        for (std::size_t t = 0; t < s.length(); ++t) {
            os << s.sample_id << ',' << s.observer_id << ',' << s.video_id << ',' << t << ','
               << detail::shortest(s.left[t]) << ',' << detail::shortest(s.right[t]) << ','
               << label_name(s.label) << '\n';
        }
    }
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    write_dataset(os, ds);
}

/// Parses the one-row-per-timestep CSV. Rows of one sample must be contiguous
/// with t running 0, 1, 2, ...
inline Dataset load_dataset(std::istream& is) {
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw ParseError(1, "missing header row");
    ++lineno;
    if (detail::trim(line) != kCsvHeader) throw ParseError(lineno, "unexpected header '" + line + "'");

    std::unordered_set<std::string> finished;
    Sample* cur = nullptr;
    while (std::getline(is, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split_fields(line);
        if (f.size() != 7) throw ParseError(lineno, "expected 7 fields, got " + std::to_string(f.size()));
        std::string id(detail::trim(f[0]));
        if (id.empty()) throw ParseError(lineno, "empty sample_id");
        const int observer = detail::parse_number<int>(f[1], lineno, "observer_id");
        const int video = detail::parse_number<int>(f[2], lineno, "video_id");
        const auto t = detail::parse_number<std::size_t>(f[3], lineno, "t");
        const double left = detail::parse_number<double>(f[4], lineno, "left_mm");
        const double right = detail::parse_number<double>(f[5], lineno, "right_mm");
        Label label;
        try {
            label = parse_label(detail::trim(f[6]));
        } catch (const ValidationError& e) {
            throw ParseError(lineno, e.what());
        }

        if (cur == nullptr || cur->sample_id != id) {
            if (cur != nullptr) finished.insert(cur->sample_id);
            if (finished.count(id)) throw ParseError(lineno, "rows of sample " + id + " are not contiguous");
            ds.samples.push_back(Sample{id, observer, video, {}, {}, label});
            cur = &ds.samples.back();
        }
        if (t != cur->length()) {
            throw ParseError(lineno, "sample " + id + ": expected t=" + std::to_string(cur->length()) +
                                         ", got " + std::to_string(t));
        }
        if (observer != cur->observer_id || video != cur->video_id || label != cur->label) {
            throw ParseError(lineno, "sample " + id + ": observer/video/label changes within the sample");
        }
        cur->left.push_back(left);
        cur->right.push_back(right);
    }
    validate(ds);
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open " + path);
    return load_dataset(is);
}

} // namespace gfs

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace gfs {

using Rng = std::mt19937_64;

/// Builds a generator from a tuple of integers, e.g. (seed, generation, index).
/// Distinct tuples give independent streams; the result never depends on call order.
inline Rng make_rng(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(keys.size() * 2 + 1);
    words.push_back(static_cast<std::uint32_t>(keys.size()));
    for (auto k : keys) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Derives a 64-bit child seed from a tuple of integers.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
    auto rng = make_rng(keys);
    return rng();
}

} // namespace gfs

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

// Distribution helpers with a fixed algorithm, so seeded runs are identical
// across standard library implementations.
namespace sentqa::rnd {

using Engine = std::mt19937_64;

/// Uniform integer in [0, n), n > 0.
inline std::uint64_t bounded(Engine& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

/// Uniform double in [0, 1).
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(Engine& rng, std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[bounded(rng, i)]);
    }
}

/// Independent stream for a named purpose derived from one user seed.
inline Engine derive(std::uint64_t seed, std::uint64_t stream) {
    return Engine(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
}

}  // namespace sentqa::rnd

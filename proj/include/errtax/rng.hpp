#pragma once

// Deterministic randomness helpers. Every stochastic operation in the
// project draws through these functions with an explicit seed, so results
// are reproducible across runs, platforms, and thread counts. Standard
// library distributions are avoided on purpose: engines are specified by
// the standard, distributions are not.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace errtax::rng {

// splitmix64 step; also used to whiten seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent sub-seed for a numbered stream (restart index,
// reference-set index, stability run...). Pure function of its inputs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    std::uint64_t s = seed;
    return std::mt19937_64(splitmix64(s));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_double(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Modulo bias is irrelevant here; determinism is.
inline std::size_t uniform_index(std::mt19937_64& eng, std::size_t n) {
    return static_cast<std::size_t>(eng() % n);
}

inline double uniform_range(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform_double(eng);
}

// Box-Muller; consumes exactly two draws per call.
inline double gaussian(std::mt19937_64& eng) {
    double u1 = uniform_double(eng);
    double u2 = uniform_double(eng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// FNV-1a, used for stable content hashing (mock fixtures, cache keys).
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xCBF29CE484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace errtax::rng

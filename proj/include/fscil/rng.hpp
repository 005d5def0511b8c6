#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace fscil {

using Rng = std::mt19937_64;

// Stable seed derivation so each pipeline stage owns an independent stream.
// splitmix64 of (seed, fnv1a(tag)); resuming a run re-derives the same streams.
inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (h | 1ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, const std::string& tag = "") {
    return Rng(tag.empty() ? seed : mix_seed(seed, tag));
}

}  // namespace fscil

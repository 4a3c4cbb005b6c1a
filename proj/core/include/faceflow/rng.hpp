#pragma once

#include <cstdint>
#include <random>

namespace faceflow {

// Deterministic helpers on top of std::mt19937_64. The std distributions are
// implementation-defined, so every draw goes through these explicit mappings
// and the results are reproducible across compilers and platforms.

inline double uniform_unit(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform_range(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(g);
}

// Unbiased integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v;
    do {
        v = g();
    } while (v >= limit);
    return v % n;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Fixed derivation of a per-sequence seed from the run seed. Keeping this a
// pure function of (global_seed, id) makes output independent of worker
// scheduling.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t id) {
    return splitmix64(splitmix64(global_seed) ^ splitmix64(id + 0x517CC1B727220A95ull));
}

// FNV-1a, used for content fingerprints in manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xCBF29CE484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace faceflow

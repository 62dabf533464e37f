#pragma once

// Seed fan-out. A single master seed is mixed with string tags and integer
// qualifiers so every randomized component (split, pck, init, batches, noise)
// draws from its own independently reproducible stream.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dkae {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a, then one mixing round.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return splitmix64(h);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
    return splitmix64(seed ^ hash_tag(tag));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a) {
    return splitmix64(mix_seed(seed, tag) ^ splitmix64(a));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                              std::uint64_t b) {
    return splitmix64(mix_seed(seed, tag, a) ^ splitmix64((b << 32) | (b >> 32)));
}

using rng_engine = std::mt19937_64;

inline rng_engine make_rng(std::uint64_t seed) { return rng_engine(seed); }

// k distinct indices from [0, n), ascending.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           std::mt19937_64& rng) {
    std::vector<std::size_t> picked;
    picked.reserve(k);
    // Selection sampling (Knuth 3.4.2 S): one pass, stays sorted.
    std::size_t remaining = n;
    std::size_t needed = k;
    for (std::size_t i = 0; i < n && needed > 0; ++i) {
        std::uniform_int_distribution<std::size_t> dist(0, remaining - 1);
        if (dist(rng) < needed) {
            picked.push_back(i);
            --needed;
        }
        --remaining;
    }
    return picked;
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

} // namespace dkae

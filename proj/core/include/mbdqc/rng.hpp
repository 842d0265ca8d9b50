#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mbdqc {

// Counter-based substream derivation: every consumer of randomness names its
// stream by (master seed, purpose label, trial, round) so that trials and
// rounds can be executed in any order, or in parallel, and still replay
// bit-for-bit.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::mt19937_64 substream(uint64_t master, std::string_view purpose,
                                 uint64_t trial = 0, uint64_t round = 0) {
    uint64_t s = splitmix64(master);
    s = splitmix64(s ^ fnv1a64(purpose));
    s = splitmix64(s ^ trial);
    s = splitmix64(s ^ round);
    return std::mt19937_64(s);
}

// Raw-bit helpers instead of std::uniform_int_distribution: the standard
// distributions are implementation-defined, these are not, and replay
// determinism is part of the I/O contract.
inline int rand_bit(std::mt19937_64& rng) { return static_cast<int>(rng() & 1ull); }

inline uint64_t rand_index(std::mt19937_64& rng, uint64_t n) {
    // Rejection sampling over the smallest covering power of two.
    uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    while (true) {
        uint64_t v = rng() & mask;
        if (v < n) return v;
    }
}

inline double rand_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mbdqc

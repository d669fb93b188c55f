#ifndef TIMME_RNG_HPP
#define TIMME_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace timme {

/// FNV-1a over a byte string. Used for seed-stream derivation and input
/// digests; not cryptographic.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Derives an independent seeded engine for a named stream. Every source of
/// randomness in the pipeline pulls from one of these, so a single master
/// seed pins the whole run.
inline std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::string_view stream) {
    std::uint64_t mix = fnv1a64(stream) ^ (master_seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    return std::mt19937_64(mix);
}

}  // namespace timme

#endif  // TIMME_RNG_HPP

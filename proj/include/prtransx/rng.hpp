#pragma once

#include <cstdint>
#include <random>

namespace prtransx {

using Rng = std::mt19937_64;

// splitmix64 step; used to derive statistically independent seeds from a
// base seed plus stream tags, so that parallel workers and per-visit
// sampling stay deterministic regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a, std::uint64_t tag_b = 0) {
    std::uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc909ULL);
    s = splitmix64(s ^ tag_a);
    s = splitmix64(s ^ (tag_b * 0x2545f4914f6cdd1dULL + 1));
    return s;
}

inline double uniform_01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Uniform integer in [0, n).
inline std::int64_t uniform_index(Rng& rng, std::int64_t n) {
    return std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng);
}

}  // namespace prtransx

#pragma once

#include <cstdint>
#include <random>

namespace synthctl {

/// All randomness flows through explicitly seeded Mersenne-Twister engines;
/// there is no global generator.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective mix of a 64-bit value.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for stream `index` derived from `base`. Parallel replications use
/// derive_seed(derive_seed(base, cell), replication) so that results do not
/// depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(base) ^ (index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace synthctl

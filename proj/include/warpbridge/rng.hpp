#pragma once

#include <cstdint>
#include <random>

namespace warpbridge {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; the building block of every derived seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based sub-seed: a pure function of (base, stream, index), so work
/// can be scheduled in any order without changing what any unit of work sees.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
    return mix64(mix64(mix64(base) ^ (stream + 0x632be59bd9b4e019ULL)) ^ (index * 0x8cb92ba72f3d8dd7ULL));
}

/// Uniform in (0, 1) from the top 53 bits of a 64-bit word.
constexpr double unit_from_bits(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform01(Rng& rng) { return unit_from_bits(rng()); }

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

// Stream identifiers for derive_seed, kept in one place so streams never collide.
namespace stream {
inline constexpr std::uint64_t em_restart = 1;
inline constexpr std::uint64_t warp_rows = 2;
inline constexpr std::uint64_t reference_draws = 3;
inline constexpr std::uint64_t subset_shuffle = 4;
inline constexpr std::uint64_t orientation = 5;
inline constexpr std::uint64_t replication = 6;
inline constexpr std::uint64_t target_draws = 7;
inline constexpr std::uint64_t chain = 8;
inline constexpr std::uint64_t divergence_mc = 9;
inline constexpr std::uint64_t em_fit = 10;
} // namespace stream

} // namespace warpbridge

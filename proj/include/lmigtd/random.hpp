#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lmigtd {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent substream seed from a master seed and a path of
/// call-site tags. Distinct tag paths give unrelated streams, so results do
/// not depend on the order in which substreams are consumed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept
{
    std::uint64_t s = mix64(master);
    for (auto t : tags)
        s = mix64(s ^ mix64(t + 0x632be59bd9b4e019ULL));
    return s;
}

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> tags)
{
    return Engine(derive_seed(master, tags));
}

// Call-site tags.
namespace stream {
inline constexpr std::uint64_t undersample = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t relieff = 3;
inline constexpr std::uint64_t ensemble = 4;
inline constexpr std::uint64_t noise = 5;
} // namespace stream

} // namespace lmigtd

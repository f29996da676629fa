#pragma once

#include <cstdint>
#include <random>

namespace trgd {

using RngStream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream i of a master seed: seed_i = splitmix64(splitmix64(master) ^ i).
// Parallel replications draw from disjoint streams so results do not depend
// on scheduling or thread count.
inline RngStream make_stream(std::uint64_t master, std::uint64_t stream_index) {
    return RngStream(splitmix64(splitmix64(master) ^ stream_index));
}

}  // namespace trgd

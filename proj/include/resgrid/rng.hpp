#pragma once

#include <cstdint>
#include <random>

namespace resgrid {

using Rng = std::mt19937_64;

/// splitmix64 step; used to expand one master seed into independent
/// per-stream sub-seeds so adding a consumer never perturbs other streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0xD6E8FEB86659FD93ull * (stream + 1);
    return splitmix64(s);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
}

/// Uniform double in [0, 1), 53-bit resolution. Hand-rolled so sampled
/// traces are reproducible independently of the standard library's
/// distribution implementations.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in {0, 1, ..., hi}.
inline int uniform_int(Rng& rng, int hi) {
    if (hi <= 0) return 0;
    int v = static_cast<int>(uniform01(rng) * (hi + 1));
    return v > hi ? hi : v;
}

} // namespace resgrid

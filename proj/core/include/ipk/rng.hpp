#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ipk::rng {

// splitmix64 finalizer; used to derive independent substream seeds from a
// master seed and a list of labels. The derivation is a pure function of the
// inputs, so cell-level work can run in any order without affecting results.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

template <typename... Rest>
std::uint64_t mix(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return mix(mix(a, b), static_cast<std::uint64_t>(rest)...);
}

// Counter-based substream: (master, labels...) -> independent mt19937_64.
template <typename... Labels>
std::mt19937_64 substream(std::uint64_t master, Labels... labels) {
    return std::mt19937_64(mix(master, static_cast<std::uint64_t>(labels)...));
}

// Stable role tags for substream derivation.
enum class Role : std::uint64_t {
    Tokens = 1,
    Noise = 2,
    GroundTruth = 3,
    TestTokens = 4,
    HotStart = 5,
    Theory = 6,
};

// Uniform in [0,1) from the top 53 bits; bit-exact across platforms, unlike
// std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Box-Muller without state; consumes two uniforms per draw.
inline double gaussian(std::mt19937_64& g) {
    double u1 = uniform01(g);
    double u2 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace ipk::rng

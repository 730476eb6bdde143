#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace abcrf {

/// Finalizer-style 64-bit mixer (splitmix64). Used to derive independent
/// seed streams from a master seed plus structural indices, so results do
/// not depend on scheduling or worker count.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a) {
    return mix64(master ^ mix64(a));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return mix64(derive_seed(master, a) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Deterministic RNG: std::mt19937_64 (whose output sequence is pinned by
/// the standard) with hand-rolled value mappings, so draws are identical
/// across platforms and standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Exponential waiting time with the given rate.
    double exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
        return -std::log1p(-uniform01()) / rate;
    }

    /// Uniform index in [0, n). Lemire multiply-shift; bias < n * 2^-64.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: empty range");
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace abcrf

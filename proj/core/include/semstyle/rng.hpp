#pragma once

#include <cstdint>
#include <random>

namespace semstyle {

/// Seeded pseudo-random source with fully specified draw formulas, so tests
/// can re-derive every sequence independently of the standard library's
/// distribution implementations.
///
/// Engine: std::mt19937_64 seeded with the given value.
/// - uniform():        (next64() >> 11) * 2^-53, in [0, 1)
/// - uniform(a, b):    a + (b - a) * uniform()
/// - uniform_int(n):   (next64() * n) >> 64 via 128-bit multiply, in [0, n)
/// - normal():         Box–Muller, sqrt(-2 ln u1) * cos(2 pi u2), consuming
///                     exactly two uniform draws per call (no caching)
/// - child(i):         independent stream seeded with splitmix64(seed ^ golden*(i+1))
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next64();

    double uniform();
    double uniform(double a, double b);
    std::uint64_t uniform_int(std::uint64_t n);  // n >= 1
    double normal();

    RandomSource child(std::uint64_t index) const;

    static std::uint64_t splitmix64(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace semstyle

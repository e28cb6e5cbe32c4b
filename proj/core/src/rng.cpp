#include "semstyle/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace semstyle {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RandomSource::next64() { return engine_(); }

double RandomSource::uniform() { return static_cast<double>(next64() >> 11) * kInv53; }

double RandomSource::uniform(double a, double b) { return a + (b - a) * uniform(); }

std::uint64_t RandomSource::uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next64()) * n) >> 64);
}

double RandomSource::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < kInv53) u1 = kInv53;  // guard log(0)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

RandomSource RandomSource::child(std::uint64_t index) const {
    return RandomSource(splitmix64(seed_ ^ (kGolden * (index + 1))));
}

std::uint64_t RandomSource::splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace semstyle

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace blockformer {

/// Seeded generator with platform-independent float draws.
///
/// std::uniform_real_distribution and std::normal_distribution are
/// implementation-defined, so weights and hyperplanes are derived from raw
/// mt19937_64 output instead. Same seed gives the same bytes everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    float uniform(float lo, float hi) {
        return static_cast<float>(lo + (static_cast<double>(hi) - lo) * uniform01());
    }

    /// Standard normal via Box-Muller; the second variate is discarded.
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = mix64(seed);
    for (char c : label) h = mix64(h ^ static_cast<unsigned char>(c));
    return h;
}

}  // namespace blockformer

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace popsynth {

// Finalizer of the SplitMix64 generator (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

/// FNV-1a 64-bit hash, used to fold string identifiers into seed material.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Deterministic seed derivation: folds each part into the seed through one
/// mix64 round. `derive_seed(master, a, b)` is the documented mixing function
/// used everywhere a sub-stream seed is needed (per-round, per-epoch,
/// per-model). Order of parts is significant.
inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed ^ 0x9E3779B97F4A7C15ull); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t part, Rest... rest) {
    return derive_seed(mix64(seed ^ 0x9E3779B97F4A7C15ull) ^ part, rest...);
}

/// Counter-based pseudo-random generator: draw i from seed s is
/// mix64(s + (i+1) * 0x9E3779B97F4A7C15), i.e. SplitMix64 with an explicit
/// counter. No hidden state beyond the counter, so any draw is reproducible
/// from (seed, index) alone and seed 0 is as good as any other.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ull;
        return mix64(seed_ + counter_);
    }

    /// Uniform in [0, 1): 53 random mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; never returns 0 so it is log-safe.
    double next_double_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) via 128-bit multiply (Lemire reduction).
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller. Both uniforms are drawn fresh per
    /// call, so consumption is a fixed two draws per normal.
    double next_normal() {
        const double u1 = next_double_open();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Categorical draw from nonnegative weights (need not be normalized).
    std::size_t next_categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_double() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, CounterRng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace popsynth

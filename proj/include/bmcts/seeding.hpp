#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace bmcts {

/// Engine used for every tree-generation and trial stream.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a stream seed from (master seed, index, salt). Streams with
/// different salts are statistically independent.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t salt) noexcept {
    return mix64(mix64(mix64(master) ^ index) ^ salt);
}

/// Small counter-based generator for short, locally seeded streams where
/// constructing a Mersenne twister would dominate the cost.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// The helpers below avoid the standard distributions, whose algorithms are
// implementation-defined, so that streams are identical across toolchains.

/// Uniform double strictly inside (0, 1).
template <std::uniform_random_bit_generator G>
double uniform_open01(G& gen) {
    static_assert(G::max() == std::numeric_limits<std::uint64_t>::max() && G::min() == 0);
    const std::uint64_t bits = gen() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Requires n > 0.
template <std::uniform_random_bit_generator G>
std::uint64_t uniform_index(G& gen, std::uint64_t n) {
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
        r = gen();
    } while (r >= limit);
    return r % n;
}

/// Bernoulli(p) draw returning 0 or 1.
template <std::uniform_random_bit_generator G>
int bernoulli(G& gen, double p) {
    return uniform_open01(gen) < p ? 1 : 0;
}

/// Standard normal draw (Box-Muller, one value per call).
template <std::uniform_random_bit_generator G>
double standard_normal(G& gen) {
    const double u1 = uniform_open01(gen);
    const double u2 = uniform_open01(gen);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace bmcts

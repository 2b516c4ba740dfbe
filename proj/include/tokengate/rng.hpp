#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tokengate {

// Deterministic RNG built on std::mt19937_64 (whose output sequence is fixed
// by the standard) with hand-rolled distributions, because the std::*_distribution
// sequences are implementation-defined and would break bit-reproducibility.
//
// Substreams: derive(seed, stream) gives an independent generator per
// (seed, stream) pair, so parallel consumers (rollouts, dataset indices) are
// reproducible and order-independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(mix(seed) ^ mix(stream ^ 0xd6e8feb86659fd93ULL)));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi].
    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [lo, hi] inclusive, unbiased via rejection.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t range = hi - lo + 1;
        if (range == 0) return next_u64(); // full 64-bit range
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range + 1) % range;
        std::uint64_t x = next_u64();
        while (x > limit) x = next_u64();
        return lo + x % range;
    }

    // Standard normal via Box-Muller; second value of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Fixed stream tags so different consumers of the same user seed never collide.
namespace stream {
inline constexpr std::uint64_t kPseudoData = 0x70736575ULL;  // dataset, warm-up stage
inline constexpr std::uint64_t kDriftData = 0x64726674ULL;   // dataset, drift stage
inline constexpr std::uint64_t kRollout = 0x726f6c6cULL;     // per-iteration mask sampling
inline constexpr std::uint64_t kParamInit = 0x696e6974ULL;   // policy initialization
} // namespace stream

} // namespace tokengate

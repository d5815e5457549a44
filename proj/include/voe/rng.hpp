#pragma once

// Counter-based deterministic RNG. One generator type for the whole
// project, always seeded explicitly; there is no global RNG state.
// Output i is a pure function of (seed, i), so streams can be replayed
// or split by deriving new seeds with voe::hash64.

#include <cmath>
#include <cstdint>

namespace voe {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(seed) {}

    // splitmix64 finalizer applied to (key, counter).
    std::uint64_t next_u64() {
        std::uint64_t z = key_ + 0x9e3779b97f4a7c15ull * ++counter_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(uniform_int(
                        static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    bool coin() { return (next_u64() & 1u) != 0; }

    // Standard normal via Box-Muller; consumes two uniforms per call
    // (no cached spare, keeps the stream position easy to reason about).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0).
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace voe

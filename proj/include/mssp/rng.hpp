#pragma once

#include <cmath>
#include <cstdint>

namespace mssp {

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood 2014).
///
/// The state advances by a Weyl increment and is scrambled through a
/// fixed avalanche function, so independent substreams can be derived
/// cheaply from (seed, stream index) pairs.  All derived samplers are
/// fully determined by the seed alone, which keeps every seeded
/// artifact in this library byte-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derives a substream seed, e.g. one per simulation run or benchmark cell.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
        return scramble(seed ^ (0x9E3779B97F4A7C15ULL * (salt + 1)));
    }

    /// Derives an independent substream, e.g. one per simulation run.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed, stream));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return scramble(state_);
    }

    /// Uniform double in [0, 1): top 53 bits of the next output.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + next_double() * (hi - lo);
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Modulo bias is < 2^-53 for every n used here (n < 2^32).
        return next_u64() % n;
    }

    /// Standard normal deviate via Box-Muller; the paired value is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the logarithm is finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = next_double();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mssp

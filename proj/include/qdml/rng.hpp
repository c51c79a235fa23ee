#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "qdml/errors.hpp"

namespace qdml {

// splitmix64 finalizer; good 64-bit mixing for seeding and stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Splittable deterministic RNG: xoshiro256** seeded from a 64-bit key.
// split(tag) derives an independent child stream from (key, tag) without
// advancing the parent, so per-slot / per-row consumers can run in any
// order (or in parallel) and still reproduce exactly.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s = mix64(s);
            w = s;
        }
        state_[0] |= 1;  // never all-zero
    }

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Unbiased integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw ValidationError("next_below: n must be positive");
        const std::uint64_t limit = (~0ull / n) * n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller (cosine branch only, deterministic).
    double gaussian() {
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Child stream keyed by (parent key, tag); does not advance the parent.
    RngStream split(std::uint64_t tag) const {
        return RngStream(mix64(key_ ^ mix64(tag ^ 0xa0761d6478bd642full)));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t key_;
    std::uint64_t state_[4];
};

}  // namespace qdml

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace sramage {

// Deterministic PRNG (xoshiro256++ seeded through splitmix64).
//
// The standard library generators are portable but the distributions are
// not; every draw here is fully specified so that identical seeds produce
// identical artifacts on any platform. All toolkit randomness flows from a
// single user seed through Rng::derive sub-streams.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    // Deterministically derives an independent stream id from (seed, stream).
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL);
        return splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
    uint64_t below(uint64_t n) {
        const uint64_t limit = n * (UINT64_MAX / n);
        uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Uniform integer in [lo, hi], inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform_real(std::log(lo), std::log(hi)));
    }

    // Standard normal via Box-Muller; no state is cached so the draw
    // sequence stays aligned with the uniform stream.
    double normal() {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Fisher-Yates shuffle driven by below().
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<uint64_t, 4> state_;
};

}

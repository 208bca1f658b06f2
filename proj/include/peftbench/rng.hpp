#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <vector>

namespace peftbench {

// Deterministic 64-bit PRNG (SplitMix64, Steele et al.). Every random draw
// in this project goes through this generator so that seeded results are
// reproducible across platforms and standard-library versions.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        return next_u64() % n;
    }

    // Standard normal via Box-Muller (cosine branch only, so one draw
    // consumes exactly two u64 values regardless of caller pattern).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // In-place Fisher-Yates shuffle. std::shuffle is not used anywhere
    // because its output is unspecified across standard libraries.
    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // k distinct values drawn from [0, n), returned sorted.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
};

inline std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(k < n ? k : n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace peftbench

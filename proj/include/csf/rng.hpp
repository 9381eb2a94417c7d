#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "csf/errors.hpp"

namespace csf {

// Deterministic RNG. All randomness in a run flows from one root seed,
// split per consumer via derive(root, tag). Distributions are hand-rolled
// from raw mt19937_64 output so streams do not depend on the standard
// library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds, rejection sampling for an unbiased draw.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (lo > hi) throw NumericError("uniform_int: empty range");
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<int64_t>(gen_());  // full 64-bit range
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return lo + static_cast<int64_t>(x % span);
    }

    // Box-Muller, no spare caching.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derives a child seed from (root, tag). FNV-1a over the tag mixed with the
    // root, then a splitmix64 finalizer so nearby roots diverge.
    static uint64_t derive(uint64_t root, std::string_view tag) {
        uint64_t h = 1469598103934665603ull ^ root;
        for (const char c : tag) {
            h ^= static_cast<uint8_t>(c);
            h *= 1099511628211ull;
        }
        h += 0x9e3779b97f4a7c15ull;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
        return h ^ (h >> 31);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace csf

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace emfi {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed. Streams are keyed
// by (purpose, index) so that e.g. per-trial and per-episode randomness
// never overlap.
inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index = 0) {
    uint64_t s = master ^ (stream * 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1b54a32d192ed03ULL);
    splitmix64(s);
    return splitmix64(s);
}

// Stateless unit-interval hash used for frozen per-item randomness
// (per-image flags, per-episode parameters). Identical inputs always give
// the identical value regardless of call order.
inline uint64_t hash_u64(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

inline double hash_unit(uint64_t a, uint64_t b) {
    return static_cast<double>(hash_u64(a, b) >> 11) * 0x1.0p-53;
}

inline uint64_t hash_str(std::string_view s) {
    // FNV-1a 64
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// xoshiro256** with an explicit, implementation-independent mapping to
// doubles and integer ranges, so seeded runs are reproducible bit-for-bit
// across platforms. std::*_distribution is deliberately not used anywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // unbiased uniform in [0, n)
    uint64_t next_below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // inclusive integer range
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Box-Muller, one value per call; consumes exactly two draws.
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // geometric on {1, 2, ...} with the given mean (mean >= 1)
    int geometric(double mean) {
        if (mean <= 1.0) return 1;
        const double p = 1.0 / mean;
        double u = next_double();
        if (u >= 1.0) u = 1.0 - 0x1.0p-53;
        int k = 1 + static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
        return k < 1 ? 1 : k;
    }

    // index drawn according to the given weights (must be non-negative;
    // zero-weight entries are never returned)
    size_t categorical(std::span<const double> probs) {
        double total = 0.0;
        for (double p : probs) total += p;
        double u = next_double() * total;
        double acc = 0.0;
        size_t last_positive = 0;
        bool seen = false;
        for (size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            acc += probs[i];
            last_positive = i;
            seen = true;
            if (u < acc) return i;
        }
        (void)seen;
        return last_positive;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace emfi

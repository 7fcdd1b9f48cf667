#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sglab {

// Draws below go through our own bounded/real helpers instead of
// std::uniform_*_distribution, whose output is implementation-defined.
// mt19937_64 itself is fully specified, so streams are portable.
using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream for (seed, stream, index) triples.
inline Rng make_rng(uint64_t seed, uint64_t stream = 0, uint64_t index = 0) {
    uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (stream * 0xd1342543de82ef95ULL));
    s = splitmix64(s ^ (index * 0x9e3779b97f4a7c15ULL));
    return Rng(s);
}

// Unbiased integer in [0, bound) via rejection.
inline uint64_t uniform_below(Rng& rng, uint64_t bound) {
    const uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
        uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(uniform_below(rng, static_cast<uint64_t>(hi - lo + 1)));
}

inline double uniform_real(Rng& rng) {  // [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_real(rng);
}

inline bool bernoulli(Rng& rng, double p) {
    return uniform_real(rng) < p;
}

// Marsaglia polar method; deterministic given the stream.
inline double normal(Rng& rng) {
    for (;;) {
        double u = uniform_real(rng, -1.0, 1.0);
        double v = uniform_real(rng, -1.0, 1.0);
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

inline double truncated_normal(Rng& rng, double stddev, double clip = 2.0) {
    for (;;) {
        double z = normal(rng);
        if (z >= -clip && z <= clip) return z * stddev;
    }
}

template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {  // Fisher-Yates, portable
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = uniform_below(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct elements drawn uniformly from v (partial Fisher-Yates).
template <typename T>
std::vector<T> sample_without_replacement(Rng& rng, std::vector<T> v, size_t k) {
    if (k > v.size()) k = v.size();
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + uniform_below(rng, v.size() - i);
        std::swap(v[i], v[j]);
    }
    v.resize(k);
    return v;
}

}  // namespace sglab

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace audiotrap {

/// Deterministic 64-bit PRNG (splitmix64). All sampling helpers are spelled
/// out here so streams are reproducible across platforms and standard
/// libraries; nothing in the pipeline uses std:: distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Rejection sampling, bias-free.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    /// Standard normal via Box-Muller; second value is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double two_pi = 6.28318530717958647692;
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(two_pi * u2);
        has_cached_ = true;
        return r * std::cos(two_pi * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Expands one global seed into independent per-stage streams; a stage is
/// named by a tag plus an optional counter (e.g. sweep point index).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage,
                                 std::uint64_t counter = 0) {
    std::uint64_t h = fnv1a64(stage);
    Rng mix(base ^ (h + 0x9E3779B97F4A7C15ULL * (counter + 1)));
    return mix.next_u64();
}

}  // namespace audiotrap

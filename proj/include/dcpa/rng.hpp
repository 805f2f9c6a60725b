#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "dcpa/errors.hpp"

namespace dcpa {

// All randomness in the toolkit flows through this wrapper. std::mt19937_64
// has a standardized sequence, and the distribution helpers below are
// hand-rolled so that draws are identical across standard library
// implementations (std::uniform_int_distribution et al. are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n). Rejection sampling keeps it exactly uniform.
    std::int64_t next_index(std::int64_t n) {
        if (n <= 0) throw ConfigError("Rng::next_index: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::int64_t>(x % un);
    }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw ConfigError("Rng::next_int: empty range");
        return lo + next_index(hi - lo + 1);
    }

    // Uniform real in [0, 1) with 53 random bits.
    double next_real01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool next_bool() { return (engine_() >> 63) != 0; }

    // Standard normal via Box-Muller; second draw of each pair is cached.
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = next_real01();
        double u2 = next_real01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// SplitMix64 finalizer, used to derive independent stream seeds from a master
// seed plus stream identifiers (fold, epoch, image index, ...).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_stream(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t p : parts) h = mix64(h ^ p);
    return h;
}

}  // namespace dcpa

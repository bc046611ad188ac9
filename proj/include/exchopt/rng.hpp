#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace exchopt {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw n of stream s under seed k is
/// mix64(key(k, s) + n * golden), so any stream can be positioned without
/// touching the others and results do not depend on scheduling.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix64(mix64(seed + 0x9e3779b97f4a7c15ull) ^ (stream * 0xd1342543de82ef95ull + 1))) {}

    std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller; the second variate of each pair is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        spare_ = rad * std::sin(ang);
        has_spare_ = true;
        return rad * std::cos(ang);
    }

    /// Poisson(mean) by sequential inversion; intended for small means.
    unsigned poisson(double mean) noexcept {
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        unsigned k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= mean / k;
            cdf += p;
            if (p == 0.0) break;
        }
        return k;
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace exchopt

#pragma once

#include <cstdint>
#include <random>

namespace fraccurv {

/// Deterministic stream. The distributions are written out by hand because the standard
/// library distributions are not specified bit-for-bit across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do v = gen_(); while (v >= limit);
        return v % n;
    }

    /// Independent child stream for task i (used to keep parallel sampling reproducible).
    Rng split(std::uint64_t i) const {
        std::uint64_t z = base_seed_mix(i);
        return Rng(z);
    }

private:
    std::uint64_t base_seed_mix(std::uint64_t i) const {
        std::mt19937_64 copy = gen_;
        std::uint64_t z = copy() + 0x9e3779b97f4a7c15ULL * (i + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 gen_;
};

}  // namespace fraccurv

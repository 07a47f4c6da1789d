#pragma once

#include <cmath>
#include <cstdint>

namespace hcqkd {

// splitmix64 (Steele/Lea/Flood), used to expand seeds into engine state.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256** 1.0 (Blackman/Vigna). Cheap enough to seed one engine per
// frame, which keeps Monte-Carlo output independent of the thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    // Independent stream for (seed, index), e.g. one per frame or grid point.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 sm(seed);
        const std::uint64_t base = sm.next();
        return Rng(base ^ (index * 0xd1342543de82ef95ULL + 0x63652362a37ebe25ULL));
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    // Knuth's product method; all rates in this project give small means.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            p *= uniform();
            ++k;
        } while (p > limit);
        return k - 1;
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift rejection-free variant is overkill here;
        // 128-bit multiply keeps the mapping unbiased enough for 64-bit n.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace hcqkd

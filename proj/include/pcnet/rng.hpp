#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pcnet {

// SplitMix64 stream keyed by (seed, index). Each (seed, index) pair owns an independent
// sequence, so results do not depend on evaluation order or thread count.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index) : state_(mix(mix(seed) ^ (index * 0xD1B54A32D192ED03ULL + 0x9E3779B97F4A7C15ULL))) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box-Muller; the second variate is cached.
    double normal() {
        if(has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do u1 = uniform();
        while(u1 == 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2 * std::numbers::pi * u2);
    }
    double normal(double mu, double sigma) { return mu + sigma * normal(); }

private:
    std::uint64_t state_;
    double spare_ = 0;
    bool has_spare_ = false;
};

} // namespace pcnet

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace semcom {

// 64-bit finalizer used to derive independent stream seeds.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seeded PRNG with hand-rolled distribution transforms. std::normal_distribution
// and friends are implementation-defined, so identical seeds would not give
// identical streams across standard libraries; these transforms do.
class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0)
        : engine_(splitmix64(seed) ^ splitmix64(0x5851F42D4C957F2DULL * (stream + 1))) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], inclusive.
    uint64_t uniform_int(uint64_t lo, uint64_t hi) {
        return lo + engine_() % (hi - lo + 1);
    }

    bool coin(double p) { return uniform() < p; }

    // Standard normal deviate, Box-Muller with a cached spare.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace semcom

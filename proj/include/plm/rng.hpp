#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace plm {

// splitmix64 — used to derive independent child seeds from a master seed.
inline uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Fold any number of integers into one seed. Order-sensitive.
inline uint64_t derive_seed(uint64_t base) { return splitmix64(base); }
template <typename... Rest>
uint64_t derive_seed(uint64_t base, uint64_t next, Rest... rest) {
    uint64_t mixed = base;
    splitmix64(mixed);
    mixed ^= 0x9E3779B97F4A7C15ull * (next + 0x165667B19E3779F9ull);
    return derive_seed(mixed, rest...);
}

// Deterministic RNG. mt19937_64 provides the bit stream; the mappings to
// uniform/normal are hand-rolled because std::*_distribution output is
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(derive_seed(seed)) {}

    uint64_t bits() { return gen_(); }

    // uniform in [0, 1)
    double canonical() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        // modulo bias is < 2^-53 for any plausible n here; accept it
        return n == 0 ? 0 : gen_() % n;
    }

    // Box-Muller with cached spare.
    double normal(double mu = 0.0, double sigma = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mu + sigma * spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = canonical();
        double u2 = canonical();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return mu + sigma * r * std::cos(a);
    }

    // normal clamped to +/- nsigma (keeps randomized spawns feasible)
    double normal_clamped(double mu, double sigma, double nsigma = 2.0) {
        double v = normal(mu, sigma);
        double lo = mu - nsigma * sigma, hi = mu + nsigma * sigma;
        return v < lo ? lo : (v > hi ? hi : v);
    }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a 64-bit — config hashing.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace plm

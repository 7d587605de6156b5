#pragma once

// Deterministic random source. The engine (std::mt19937_64) has a fully
// specified output sequence; the distributions here are hand-rolled because
// the standard library's distribution objects are implementation-defined and
// would break bitwise reproducibility across toolchains.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace relpv {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_material_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, bound) via rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Standard normal via Box-Muller (one value per call; pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // In-place Fisher-Yates shuffle with a fixed visitation order.
    template <typename V>
    void shuffle(V& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // Derive an independent stream; stable for a given (root seed, tag) and
    // unaffected by how much the parent has already been consumed.
    Rng child(std::uint64_t tag) const {
        // splitmix64 finalizer over the root seed and tag
        std::uint64_t z = seed_material_ + 0x9E3779B97f4A7C15ull * (tag + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z = z ^ (z >> 31);
        return Rng(z);
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_material_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace relpv

#ifndef SPECREC_RNG_HPP
#define SPECREC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace specrec {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used both as the seed
/// mixing function and to expand a single 64-bit seed into engine state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Element `index` of the SplitMix64 stream seeded at `base`. This is the
/// documented mixing function for deriving independent per-run seeds:
/// derive_seed(base, i) != derive_seed(base, j) for i != j, and derived
/// streams do not overlap the base stream in practice.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t state = base + index * 0x9E3779B97F4A7C15ull;
    return splitmix64(state);
}

/// Deterministic random source: a std::mt19937_64 (algorithm fixed by the
/// C++ standard, hence bit-reproducible across platforms) plus a Box-Muller
/// transform for normals. std::normal_distribution is deliberately not used:
/// its output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform in [0,1) with 53 random mantissa bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on two uniforms; pairs are cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Independent child stream `index`, derived with the same mixing
    /// function as derive_seed. Splitting does not disturb this stream.
    Rng split(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace specrec

#endif

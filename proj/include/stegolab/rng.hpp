#pragma once

#include <cmath>
#include <cstdint>

namespace stegolab {

// Splittable deterministic PRNG (splitmix64 core). Unlike std::mt19937 with
// standard-library distributions, every draw here is bit-reproducible across
// platforms, so seeded experiments replay exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; one value (two draws) per call.
    double next_gaussian() {
        const double u1 = 1.0 - next_unit(); // in (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Independent child stream; distinct keys give decorrelated generators
    // and never disturb this stream's position.
    Rng split(std::uint64_t key) const {
        return Rng(mix(state_ ^ mix(key + 0x632be59bd9b4e019ull)));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

// One-shot stream derivation for call sites that just need a child seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
    return Rng(seed).split(key).next_u64();
}

} // namespace stegolab

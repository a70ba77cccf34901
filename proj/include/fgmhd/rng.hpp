#pragma once

#include <cstdint>

namespace fgmhd {

// SplitMix64 (Steele/Lea/Vigna). This is the project's only source of
// randomness: a fixed algorithm with 64-bit state, so every seeded run is
// bit-identical across platforms and compilers. std::mt19937 plus the
// standard distributions would not give that guarantee.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1), 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [0, n), n >= 1
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // +1 or -1 with equal probability
    double next_sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  private:
    std::uint64_t state_;
};

// Stateless mixing of a base seed with stream indices. Used to derive
// independent per-entry / per-slot / per-attempt seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    Rng r(seed ^ (a * 0xD1342543DE82EF95ull) ^ (b * 0xAF251AF3B0F025B5ull));
    return r.next_u64();
}

// FNV-1a, used for deterministic train/holdout splits keyed on entry ids.
inline std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x00000100000001B3ull;
    }
    return h;
}

}  // namespace fgmhd

#pragma once

#include <cstdint>

namespace pclab {

// SplitMix64 finalizer. All randomness in the library is derived from
// this mixer so that every stream is a pure function of (seed, counter)
// and replays identically across platforms and compilers. The standard
// library distributions are avoided on purpose: their output is
// implementation-defined.
inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t kRngGamma = 0x9e3779b97f4a7c15ULL;

// Value of a counter-addressed stream at position i.
inline std::uint64_t bits_at(std::uint64_t seed, std::uint64_t i) {
    return mix64(seed + (i + 1) * kRngGamma);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_at(std::uint64_t seed, std::uint64_t i) {
    return static_cast<double>(bits_at(seed, i) >> 11) * 0x1.0p-53;
}

// Derive an independent substream seed from a base seed and tags.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag + kRngGamma));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1,
                                 std::uint64_t tag2) {
    return derive_seed(derive_seed(seed, tag1), tag2);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1,
                                 std::uint64_t tag2, std::uint64_t tag3) {
    return derive_seed(derive_seed(seed, tag1, tag2), tag3);
}

// Sequential convenience wrapper over the counter-addressed stream.
// Rng(seed).next_bits() enumerates bits_at(seed, 0), bits_at(seed, 1), ...
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_bits() { return bits_at(seed_, counter_++); }

    double next_uniform() {
        return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_bits() % n; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace pclab

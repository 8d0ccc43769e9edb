#pragma once

#include <cstdint>

namespace hg {

/// Counter-mode SplitMix64. The i-th value of the stream for a given seed is
///
///   value(seed, i) = mix(seed + (i + 1) * 0x9E3779B97F4A7C15)
///   mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///           z ^= z >> 27; z *= 0x94D049BB133111EB;
///           z ^= z >> 31;
///
/// with all arithmetic modulo 2^64. The stream is stateless in the counter,
/// so fixtures are reproducible across platforms and languages.
std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index);

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return splitmix64_at(seed_, counter_++); }

    /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform in [0, n); plain modulo reduction (documented, bias is
    /// irrelevant at the corpus sizes used here).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace hg

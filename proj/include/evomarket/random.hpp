#pragma once

// Seeded random streams. Every simulation draws from a 64-bit Mersenne twister whose state is
// expanded from (seed, stream) through std::seed_seq, so paths are reproducible per seed and
// distinct streams of one seed do not overlap in practice.

#include <cstdint>
#include <random>

namespace evomarket {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

/// Laplace(location, scale) draw: a random sign times an exponential magnitude.
inline double laplace_draw(Rng& rng, double location, double scale) {
    std::exponential_distribution<double> mag(1.0);
    const bool neg = (rng() >> 63) != 0;
    const double e = scale * mag(rng);
    return neg ? location - e : location + e;
}

} // namespace evomarket

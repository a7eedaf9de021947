#pragma once

#include <cstdint>
#include <random>

namespace dualcusum {

/// Random stream handle passed explicitly to every sampler.
using Rng = std::mt19937_64;

/// Derive an independent stream from a base seed and a stream index. The same
/// (seed, index) pair always yields the same stream, which is what makes
/// parallel simulations reproducible regardless of scheduling.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

}  // namespace dualcusum

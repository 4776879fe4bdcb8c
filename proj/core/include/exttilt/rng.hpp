#pragma once

#include <array>
#include <cstdint>

namespace exttilt {

/// Counter-based generator (Philox-4x32, 10 rounds).  A draw is a pure
/// function of (seed, stream, counter), so parallel streams reproduce
/// bit-exactly regardless of scheduling or worker count.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t stream,
                                              std::uint64_t counter);

    /// Uniform double in [0, 1) from the first 64 bits of the block.
    static double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
};

} // namespace exttilt

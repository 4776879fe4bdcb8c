#include "exttilt/rng.hpp"

namespace exttilt {

namespace {
constexpr std::uint32_t mul0 = 0xD2511F53u;
constexpr std::uint32_t mul1 = 0xCD9E8D57u;
constexpr std::uint32_t weyl0 = 0x9E3779B9u;
constexpr std::uint32_t weyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = std::uint64_t(mul0) * c[0];
    const std::uint64_t p1 = std::uint64_t(mul1) * c[2];
    c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k0, std::uint32_t(p1),
         std::uint32_t(p0 >> 32) ^ c[3] ^ k1, std::uint32_t(p0)};
}
} // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::uint64_t seed, std::uint64_t stream,
                                               std::uint64_t counter) {
    std::array<std::uint32_t, 4> c = {std::uint32_t(counter), std::uint32_t(counter >> 32),
                                      std::uint32_t(stream), std::uint32_t(stream >> 32)};
    std::uint32_t k0 = std::uint32_t(seed);
    std::uint32_t k1 = std::uint32_t(seed >> 32);
    for (int r = 0; r < 10; ++r) {
        philox_round(c, k0, k1);
        k0 += weyl0;
        k1 += weyl1;
    }
    return c;
}

double Philox4x32::uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const auto b = block(seed, stream, counter);
    const std::uint64_t bits = (std::uint64_t(b[1]) << 32) | b[0];
    return double(bits >> 11) * 0x1.0p-53;
}

} // namespace exttilt

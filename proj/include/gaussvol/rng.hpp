#pragma once

// Counter-based random number generation (Philox4x32-10) with Box-Muller
// normal variates. Every draw is a pure function of (seed, stream, index),
// so simulations are reproducible for any thread count or batch order.

#include <array>
#include <cmath>
#include <cstdint>

namespace gaussvol::rng {

// Logical streams keep independent uses of the generator from colliding.
enum class Stream : std::uint32_t {
    path_step = 0,   // per (path, step) price-driving increments in the Euler pricer
    path_init = 1,   // per path initial-state draws
    kl_sample = 2,   // per (sample, block) draws in the KL sampler
    fbm_freq = 3,    // per (path-pair, frequency) draws in the fBm generator
    path_vol = 4,    // per (path, step) volatility-driving increments
};

struct Philox4x32 {
    std::uint32_t key0, key1;

    explicit Philox4x32(std::uint64_t seed)
        : key0(static_cast<std::uint32_t>(seed)),
          key1(static_cast<std::uint32_t>(seed >> 32)) {}

    // One 10-round block: 4 counter words in, 4 random words out.
    std::array<std::uint32_t, 4> operator()(std::uint32_t c0, std::uint32_t c1,
                                            std::uint32_t c2, std::uint32_t c3) const {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        std::uint32_t k0 = key0, k1 = key1;
        std::array<std::uint32_t, 4> c{c0, c1, c2, c3};
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(M0) * c[0];
            const std::uint64_t p1 = std::uint64_t(M1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0,
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1,
                 static_cast<std::uint32_t>(p0)};
            k0 += W0;
            k1 += W1;
        }
        return c;
    }
};

// Strictly inside (0,1): top 53 bits of a 64-bit word, offset by half an ulp.
inline double uniform01(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (std::uint64_t(hi) << 32) | lo;
    return double(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

struct NormalPair {
    double z0, z1;
};

// Two standard normals from one Philox block (Box-Muller).
inline NormalPair normal_pair(const Philox4x32& g, std::uint64_t index,
                              std::uint32_t sub, Stream stream) {
    const auto w = g(static_cast<std::uint32_t>(index),
                     static_cast<std::uint32_t>(index >> 32), sub,
                     static_cast<std::uint32_t>(stream));
    const double u1 = uniform01(w[0], w[1]);
    const double u2 = uniform01(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace gaussvol::rng

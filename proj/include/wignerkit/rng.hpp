#pragma once

// Counter-based random numbers (Philox4x32-10). A draw is a pure function of
// (key, counter), so each trajectory owns an independent stream and results
// do not depend on how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

#include "wignerkit/numeric.hpp"

namespace wignerkit {

using Philox4x32 = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline Philox4x32 philox4x32_10(Philox4x32 ctr, PhiloxKey key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// What a block of random words is used for; part of the counter.
enum class StreamPurpose : std::uint32_t { Step = 0, Init = 1, Resample = 2 };

/// Two independent standard normals for (seed, trajectory, step, purpose).
inline std::pair<double, double> gaussian_pair(std::uint64_t seed, std::uint64_t trajectory, std::uint32_t step,
                                               StreamPurpose purpose) {
    const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const Philox4x32 ctr{static_cast<std::uint32_t>(trajectory), static_cast<std::uint32_t>(trajectory >> 32), step,
                         static_cast<std::uint32_t>(purpose)};
    const Philox4x32 r = philox4x32_10(ctr, key);
    const std::uint64_t a = ((static_cast<std::uint64_t>(r[0]) << 32) | r[1]) >> 11;
    const std::uint64_t b = ((static_cast<std::uint64_t>(r[2]) << 32) | r[3]) >> 11;
    constexpr double inv53 = 1.0 / 9007199254740992.0;
    const double u1 = (static_cast<double>(a) + 1.0) * inv53;  // (0, 1]
    const double u2 = static_cast<double>(b) * inv53;          // [0, 1)
    const double rad = std::sqrt(-2.0 * std::log(u1));
    return {rad * std::cos(2.0 * kPi * u2), rad * std::sin(2.0 * kPi * u2)};
}

}  // namespace wignerkit

#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace kyle {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    /// Ten rounds of the Philox bijection applied to `ctr` under this key.
    constexpr Counter operator()(Counter ctr) const {
        Key key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }

    /// Block `block` of stream `stream`.
    constexpr Counter block(std::uint64_t stream, std::uint64_t block) const {
        return (*this)({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)});
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57;
    static constexpr std::uint32_t kW0 = 0x9E3779B9;
    static constexpr std::uint32_t kW1 = 0xBB67AE85;

    static constexpr Counter single_round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    Key key_;
};

/// Uniform on the open interval (0, 1): (k + 0.5) / 2^52 from the top 52 bits.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& block) {
    const double u1 = to_open_unit(block[0], block[1]);
    const double u2 = to_open_unit(block[2], block[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace kyle

#pragma once

// Counter-based normal variates: Philox4x32-10 keyed by the run seed, with the
// counter carrying (step, block | stream, path). Any (seed, stream, path, step)
// cell can be regenerated independently, so parallel and serial path loops
// produce identical draws.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace degpar {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// Independent standard-normal streams addressed by (stream, path, step).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    /// Fills `out[0..count)` (count <= 4) with N(0,1) draws for one cell.
    void normals(std::uint32_t stream, std::uint64_t path, std::uint32_t step, double* out,
                 int count) const noexcept {
        for (int block = 0; 2 * block < count; ++block) {
            const PhiloxCounter ctr{step, static_cast<std::uint32_t>(block) | (stream << 8),
                                    static_cast<std::uint32_t>(path),
                                    static_cast<std::uint32_t>(path >> 32)};
            const PhiloxCounter r = philox4x32_10(ctr, key_);
            const double u1 = 1.0 - to_unit(r[0], r[1]);  // (0, 1]
            const double u2 = to_unit(r[2], r[3]);
            const double radius = std::sqrt(-2.0 * std::log(u1));
            const double angle = 2.0 * std::numbers::pi * u2;
            out[2 * block] = radius * std::cos(angle);
            if (2 * block + 1 < count) out[2 * block + 1] = radius * std::sin(angle);
        }
    }

private:
    static double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    PhiloxKey key_;
};

}  // namespace degpar

#include "degpar/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace degpar;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
    EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
              (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(NormalStream, CellsAreIndependentOfCallOrder) {
    const NormalStream rng(42);
    double a[3], b[3];
    rng.normals(0, 17, 5, a, 3);
    double junk[4];
    rng.normals(1, 3, 2, junk, 4);
    rng.normals(0, 17, 5, b, 3);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
    double other[3];
    rng.normals(1, 17, 5, other, 3);
    EXPECT_NE(a[0], other[0]);
}

TEST(NormalStream, MomentsAreStandard) {
    const NormalStream rng(7);
    const int n = 200000;
    double sum = 0, sum2 = 0, sum4 = 0;
    for (int i = 0; i < n; ++i) {
        double z[2];
        rng.normals(0, static_cast<std::uint64_t>(i), 0, z, 2);
        for (double v : z) {
            sum += v;
            sum2 += v * v;
            sum4 += v * v * v * v;
        }
    }
    const double m = 2.0 * n;
    EXPECT_NEAR(sum / m, 0.0, 4.0 / std::sqrt(m));
    EXPECT_NEAR(sum2 / m, 1.0, 4.0 * std::sqrt(2.0 / m));
    EXPECT_NEAR(sum4 / m, 3.0, 4.0 * std::sqrt(96.0 / m));
}

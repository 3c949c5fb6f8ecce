#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pnorm/rng.hpp"

using pnorm::Rng;
using pnorm::splitmix64;

TEST(Rng, SplitMixReferenceValues) {
    // First output of the reference SplitMix64 generator seeded with 0.
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
    EXPECT_NE(splitmix64(1), splitmix64(2));
}

TEST(Rng, EngineIsStandardMersenneTwister64) {
    Rng a(42);
    std::mt19937_64 ref(splitmix64(42));
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), ref());
}

TEST(Rng, SameSeedSameStream) {
    Rng a(7), b(7);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, SplitStreamsDifferAndAreReproducible) {
    const Rng root(5);
    Rng s1 = root.split(1), s2 = root.split(2), s1b = root.split(1);
    EXPECT_NE(s1.next_u64(), s2.next_u64());
    Rng s1c = root.split(1);
    EXPECT_EQ(s1b.next_u64(), s1c.next_u64());
}

TEST(Rng, UniformStaysInHalfOpenUnitInterval) {
    Rng r(1);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LE(hi, 1.0);
    EXPECT_NEAR(sum / n, 0.5, 5e-3);
}

TEST(Rng, NormalMomentsMatch) {
    Rng r(2);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 1e-2);
    EXPECT_NEAR(s2 / n, 1.0, 1.5e-2);
    EXPECT_NEAR(s4 / n, 3.0, 0.1);
    Rng q(2);
    EXPECT_NEAR(q.normal(3.0, 0.0), 3.0, 0.0);
}

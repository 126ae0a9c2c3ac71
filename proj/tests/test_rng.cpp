#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cropforge/rng.hpp"

using namespace cropforge;

TEST(Rng, MatchesReferenceSplitMix64) {
    // First outputs of the reference SplitMix64 generator seeded with 0.
    Stream s(0);
    EXPECT_EQ(s.next_u64(), 0xE220A8397B1DCDAFull);
    EXPECT_EQ(s.next_u64(), 0x6E789E6AA1B965F4ull);
    EXPECT_EQ(s.next_u64(), 0x06C45D188009454Full);
}

TEST(Rng, Fnv1aReferenceValues) {
    EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8Cull);
}

TEST(Rng, StreamsAreReproducibleAndKeyed) {
    Stream a(42, {1, 2, 3});
    Stream b(42, {1, 2, 3});
    Stream c(42, {1, 3, 2});
    Stream d(43, {1, 2, 3});
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        EXPECT_EQ(va, b.next_u64());
        EXPECT_NE(va, c.next_u64());
        EXPECT_NE(va, d.next_u64());
    }
}

TEST(Rng, UniformStaysInUnitInterval) {
    Stream s(7, {fnv1a64("uniform")});
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    // mean of U(0,1): sigma of the sample mean is sqrt(1/12/n)
    EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, BelowCoversRangeWithoutBias) {
    Stream s(3, {fnv1a64("below")});
    std::array<int, 7> hist{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = s.below(7);
        ASSERT_LT(v, 7u);
        ++hist[v];
    }
    const double expected = n / 7.0;
    const double sigma = std::sqrt(expected * (1.0 - 1.0 / 7.0));
    for (int h : hist) EXPECT_NEAR(h, expected, 5.0 * sigma);
}

TEST(Rng, PoissonMeanAndVariance) {
    for (double mean : {0.5, 4.0, 96.0}) {
        Stream s(11, {fnv1a64("poisson"), static_cast<std::uint64_t>(mean * 10)});
        const int n = 20000;
        double sum = 0.0;
        double sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = static_cast<double>(s.poisson(mean));
            sum += v;
            sum2 += v * v;
        }
        const double m = sum / n;
        const double var = sum2 / n - m * m;
        EXPECT_NEAR(m, mean, 5.0 * std::sqrt(mean / n)) << "mean " << mean;
        EXPECT_NEAR(var, mean, 0.1 * mean) << "mean " << mean;
    }
    Stream z(1);
    EXPECT_EQ(z.poisson(0.0), 0u);
}

TEST(Rng, DerivedKeysDoNotCollide) {
    std::set<std::uint64_t> keys;
    for (std::uint64_t row = 0; row < 50; ++row)
        for (std::uint64_t k = 0; k < 50; ++k) keys.insert(derive_key(9, {fnv1a64("plant"), row, k}));
    EXPECT_EQ(keys.size(), 2500u);
}

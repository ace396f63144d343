#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gmclab/rng.hpp"

using namespace gmclab;

TEST(Rng, SameTupleSameStream) {
    CounterStream a(42, 3, 7, StreamTag::Layer);
    CounterStream b(42, 3, 7, StreamTag::Layer);
    auto x = a.normals(1001);
    auto y = b.normals(1001);
    EXPECT_EQ(x, y);
}

TEST(Rng, DistinctTuplesDiffer) {
    auto base = CounterStream(42, 3, 7, StreamTag::Layer).normals(8);
    EXPECT_NE(base, CounterStream(43, 3, 7, StreamTag::Layer).normals(8));
    EXPECT_NE(base, CounterStream(42, 4, 7, StreamTag::Layer).normals(8));
    EXPECT_NE(base, CounterStream(42, 3, 8, StreamTag::Layer).normals(8));
    EXPECT_NE(base, CounterStream(42, 3, 7, StreamTag::Bootstrap).normals(8));
}

TEST(Rng, ContinuationMatchesSingleDraw) {
    CounterStream a(1, 0, 0, StreamTag::Sampling);
    std::vector<std::uint64_t> all(32);
    a.fill_bits(all);
    CounterStream b(1, 0, 0, StreamTag::Sampling);
    std::vector<std::uint64_t> first(8), second(24);
    b.fill_bits(first);
    b.fill_bits(second);
    // One call per 64-byte block: the first call consumed exactly one block.
    for (int i = 0; i < 8; ++i) EXPECT_EQ(first[i], all[i]);
    for (int i = 0; i < 24; ++i) EXPECT_EQ(second[i], all[8 + i]);
}

TEST(Rng, NormalMoments) {
    CounterStream s(2024, 0, 0, StreamTag::Sampling);
    const std::size_t n = 400000;
    auto z = s.normals(n);
    double m = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double v = 0.0, k = 0.0;
    for (double x : z) {
        v += (x - m) * (x - m);
        k += std::pow(x - m, 4);
    }
    v /= n;
    k /= n;
    EXPECT_LT(std::abs(m), 3.0 / std::sqrt(double(n)));
    EXPECT_LT(std::abs(v - 1.0), 3.0 * std::sqrt(2.0 / n));
    EXPECT_LT(std::abs(k - 3.0), 3.0 * std::sqrt(96.0 / n));
}

TEST(Rng, ShuffleIsPermutation) {
    CounterStream s(5, 0, 0, StreamTag::Permutation);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    s.shuffle(v);
    auto w = v;
    std::sort(w.begin(), w.end());
    for (int i = 0; i < 100; ++i) EXPECT_EQ(w[i], i);
}

TEST(Rng, ConfigHashIsSha256) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

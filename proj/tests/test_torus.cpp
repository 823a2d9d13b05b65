#include "wkam/parallel.hpp"
#include "wkam/torus.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

using namespace wkam;

TEST(Torus, WrapUnitMapsIntoHalfOpenInterval) {
    EXPECT_DOUBLE_EQ(wrap_unit(0.25), 0.25);
    EXPECT_DOUBLE_EQ(wrap_unit(1.25), 0.25);
    EXPECT_DOUBLE_EQ(wrap_unit(-0.25), 0.75);
    EXPECT_DOUBLE_EQ(wrap_unit(1.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_unit(-1e-20), 0.0);
}

TEST(Torus, WrapSignedMapsIntoCenteredInterval) {
    EXPECT_DOUBLE_EQ(wrap_signed(0.75), -0.25);
    EXPECT_DOUBLE_EQ(wrap_signed(0.5), -0.5);
    EXPECT_DOUBLE_EQ(wrap_signed(-0.4), -0.4);
    EXPECT_NEAR(wrap_signed(2.1), 0.1, 1e-12);
}

TEST(Torus, DistanceUsesShortestTranslate) {
    TorusPoint<1> a{{0.05}}, b{{0.95}};
    EXPECT_NEAR(torus_distance<1>(a, b), 0.1, 1e-15);
    TorusPoint<2> p{{0.1, 0.9}}, q{{0.9, 0.1}};
    EXPECT_NEAR(torus_distance<2>(p, q), std::sqrt(0.08), 1e-15);
    EXPECT_DOUBLE_EQ(torus_distance<2>(p, p), 0.0);
}

TEST(Torus, DistanceIsSymmetricAndBoundedByHalfDiagonal) {
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            TorusPoint<2> a{{i / 20.0, (3 * i % 20) / 20.0}}, b{{j / 20.0, (7 * j % 20) / 20.0}};
            double d = torus_distance<2>(a, b);
            EXPECT_DOUBLE_EQ(d, torus_distance<2>(b, a));
            EXPECT_LE(d, std::sqrt(0.5) + 1e-15);
        }
}

TEST(Torus, CanonicalPreservesClass) {
    TorusPoint<2> p{{-0.3, 2.7}};
    auto c = p.canonical();
    EXPECT_NEAR(c[0], 0.7, 1e-15);
    EXPECT_NEAR(c[1], 0.7, 1e-15);
    EXPECT_NEAR(torus_distance<2>(p, c), 0.0, 1e-15);
}

TEST(Torus, VectorHelpers) {
    Vec<2> a{3.0, -4.0}, b{1.0, 2.0};
    EXPECT_DOUBLE_EQ(dot<2>(a, b), -5.0);
    EXPECT_DOUBLE_EQ(norm<2>(a), 5.0);
    EXPECT_DOUBLE_EQ(max_abs<2>(a), 4.0);
    auto d = sub(a, b);
    EXPECT_DOUBLE_EQ(d[0], 2.0);
    EXPECT_DOUBLE_EQ(d[1], -6.0);
}

TEST(Parallel, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
    auto run = [](int threads) {
        try {
            parallel_for(100, threads, [](std::size_t i) {
                if (i == 17 || i == 80) throw std::runtime_error(std::to_string(i));
            });
        } catch (const std::runtime_error& e) {
            return std::string(e.what());
        }
        return std::string("none");
    };
    EXPECT_EQ(run(1), "17");
    EXPECT_EQ(run(4), "17");
}

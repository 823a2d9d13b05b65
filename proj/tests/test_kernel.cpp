#include "wkam/kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

using namespace wkam;

namespace {

// Brute force over all (steps+1)-node paths x -> y of the left-folded cost sum.
template <int D>
double enumerate_paths(const CostKernel<D>& k, std::size_t x, std::size_t y, std::size_t steps) {
    double best = kInf;
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t at, std::size_t left, double acc) {
        if (left == 0) {
            if (at == y) best = std::min(best, acc);
            return;
        }
        for (std::size_t z = 0; z < k.nodes(); ++z) {
            double c = k.normalized(at, z);
            if (c == kInf) continue;
            walk(z, left - 1, left == steps ? c : acc + c);
        }
    };
    walk(x, steps, 0.0);
    return best;
}

} // namespace

TEST(Grid, IndexRoundTripAndWrap) {
    GridSpec<2> g{8, 0.1, 4.0};
    for (std::size_t i = 0; i < g.nodes(); ++i) EXPECT_EQ(g.flat_index(g.multi_index(i)), i);
    EXPECT_EQ(g.flat_index({-1, 9}), g.flat_index({7, 1}));
    EXPECT_EQ(g.nearest(TorusPoint<2>{{0.99, 0.26}}), g.flat_index({0, 2}));
    EXPECT_DOUBLE_EQ(g.point(g.flat_index({3, 5}))[1], 5.0 / 8.0);
}

TEST(Grid, ValidationRejectsShortReach) {
    EXPECT_THROW((GridSpec<1>{64, 0.01, 1.0}.validate()), ConfigError);
    EXPECT_NO_THROW((GridSpec<1>{64, 0.01, 4.0}.validate()));
    EXPECT_THROW((GridSpec<1>{4, 0.1, 40.0}.validate()), ConfigError);
}

TEST(Grid, AdmissibleLiftsAreLexicographicDiscs) {
    GridSpec<2> g{10, 0.1, 2.0}; // reach 2 nodes
    auto lifts = admissible_lifts<2>(g);
    EXPECT_EQ(lifts.size(), 13u); // lattice points with a^2 + b^2 <= 4
    EXPECT_TRUE(std::is_sorted(lifts.begin(), lifts.end()));
    GridSpec<1> g1{10, 0.1, 3.0};
    EXPECT_EQ(admissible_lifts<1>(g1).size(), 7u);
}

TEST(Kernel, FreeKernelHandValues) {
    // n = 8, tau = 1/8: a step of j nodes has velocity j, cost tau j^2 / 2 - c j / 8.
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{8, 0.125, 2.0}; // reach 2 nodes
    CohomologyClass<1> c{{0.5}};
    auto k = build_kernel<1>(m, g, c, 0.0);
    for (int j = -2; j <= 2; ++j) {
        std::size_t y = g.flat_index({j});
        EXPECT_NEAR(k.cost(0, y), 0.125 * j * j / 2.0 - 0.5 * j / 8.0, 1e-15) << j;
        EXPECT_EQ(k.lift[y][0], j);
    }
    EXPECT_EQ(k.cost(0, 4), kInf); // 4 nodes away is beyond the reach of 2
    EXPECT_DOUBLE_EQ(k.max_lift_norm, 2.0);
}

TEST(Kernel, TiesGoToLexicographicallySmallestLift) {
    // n = 8 with reach 4: lifts -4 and +4 land on the same node with equal cost at c = 0.
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{8, 0.125, 4.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{}, 0.0);
    EXPECT_EQ(k.lift[4][0], -4);
    EXPECT_NEAR(k.displacement(0, 4)[0], -0.5, 1e-15);
}

TEST(Kernel, PotentialEntersThroughQuadratureRule) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> left{16, 0.1, 20.0, Quadrature::left};
    GridSpec<1> mid{16, 0.1, 20.0, Quadrature::midpoint};
    CohomologyClass<1> c{};
    auto kl = build_kernel<1>(m, left, c, 0.0);
    auto km = build_kernel<1>(m, mid, c, 0.0);
    // Step 0 -> 2 nodes: displacement 1/8, velocity 1.25.
    double kin = 0.1 * 0.5 * 1.25 * 1.25;
    EXPECT_NEAR(kl.cost(0, 2), kin - 0.1 * std::cos(0.0), 1e-15);
    EXPECT_NEAR(km.cost(0, 2), kin - 0.1 * std::cos(2 * std::numbers::pi / 16), 1e-15);
}

TEST(Kernel, NormalizationShiftsFiniteEntries) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{16, 0.1, 2.5}; // reach 4 nodes
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{}, 1.5);
    auto nm = k.normalized_matrix();
    EXPECT_NEAR(nm(3, 4), k.cost(3, 4) + 0.15, 1e-15);
    EXPECT_EQ(nm(0, 8), kInf);
}

TEST(Kernel, FactoryHookIsUsedWhenSet) {
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{8, 0.125, 16.0};
    int calls = 0;
    KernelFactory<1> f = [&](const LagrangianModel<1>& mm, const GridSpec<1>& gg, const CohomologyClass<1>& cc) {
        ++calls;
        return build_kernel<1>(mm, gg, cc, 0.0);
    };
    auto a = make_kernel<1>(f, m, g, CohomologyClass<1>{});
    auto b = make_kernel<1>({}, m, g, CohomologyClass<1>{});
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(max_abs_difference(a.cost, b.cost), 0.0);
}

TEST(FiniteHorizon, EqualsExhaustiveEnumeration) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{10, 0.1, 20.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{{0.3}}, 0.7);
    for (std::size_t steps = 1; steps <= 4; ++steps) {
        auto f = finite_horizon<1>(k, steps);
        for (std::size_t x = 0; x < g.nodes(); ++x)
            for (std::size_t y = 0; y < g.nodes(); ++y) EXPECT_EQ(f.table(x, y), enumerate_paths<1>(k, x, y, steps));
    }
}

TEST(FiniteHorizon, EqualsEnumerationOnTwoTorus) {
    Harmonic<2> h{{1, 1}, 0.5};
    auto m = LagrangianModel<2>::mechanical({h});
    GridSpec<2> g{8, 0.125, 2.0}; // 64 nodes, reach 2 nodes
    auto k = build_kernel<2>(m, g, CohomologyClass<2>{{0.2, -0.1}}, 0.0);
    auto f = finite_horizon<2>(k, 3);
    for (std::size_t x = 0; x < g.nodes(); x += 5)
        for (std::size_t y = 0; y < g.nodes(); ++y) EXPECT_EQ(f.table(x, y), enumerate_paths<2>(k, x, y, 3));
}

TEST(FiniteHorizon, RecoveredPathReproducesValue) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{16, 0.05, 40.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{{0.4}}, 1.0);
    auto f = finite_horizon<1>(k, 6);
    EXPECT_DOUBLE_EQ(f.t, 6 * 0.05);
    for (std::size_t x : {0u, 5u, 11u})
        for (std::size_t y = 0; y < g.nodes(); ++y) {
            auto p = recover_path<1>(f, x, y);
            ASSERT_EQ(p.nodes.size(), 7u);
            EXPECT_EQ(p.nodes.front(), x);
            EXPECT_EQ(p.nodes.back(), y);
            EXPECT_EQ(p.total, f.table(x, y));
        }
    EXPECT_THROW(finite_horizon<1>(k, 0), ConfigError);
}

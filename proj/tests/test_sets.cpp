#include "wkam/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wkam;

namespace {

AnalysisOptions quick_options() {
    AnalysisOptions o;
    o.set_tol = 1e-2;
    return o;
}

} // namespace

TEST(Sets, DefaultSetTolerance) {
    EXPECT_DOUBLE_EQ(default_set_tol(1e-4, 64), 1e-3 + 0.5 / 64);
    EXPECT_DOUBLE_EQ(default_set_tol(0.0, 100, 1.0), 0.01);
}

TEST(Sets, DefaultDistinctToleranceIsOneVelocityStep) {
    EXPECT_DOUBLE_EQ(default_distinct_tol(32, 1.0), 1.0 / 32);
    EXPECT_DOUBLE_EQ(default_distinct_tol(128, 1.0), 1e-2);
}

TEST(Sets, FreeModelRandomSeedsStayWithinLatticeResolution) {
    // At c = 0 every grid function with slopes below 1/(2 n tau) is a discrete
    // fixed point, so random seeds yield lifts within one velocity step of 0.
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{32, 1.0, 0.0};
    auto o = quick_options();
    o.seeds = 3;
    o.seed = 11;
    auto a = analyze_class<1>(m, g, CohomologyClass<1>{}, o);
    EXPECT_EQ(a.mane.violations(), 0u);
    for (const auto& lifts : a.mane.momenta)
        for (const auto& p : lifts) EXPECT_LE(std::abs(p.p[0]), 1.0 / (2 * 32 * 1.0) + 1e-12);
}

TEST(Sets, MomentumLiftStencils) {
    GridSpec<1> g{8, 0.1, 4.0};
    GridFunction<1> u{g, CohomologyClass<1>{{0.5}}, {0, 1, 4, 9, 16, 9, 4, 1}};
    std::vector<char> all(8, 1), none(8, 0);
    // Symmetric: (u[3] - u[1]) / (2/8) + c.
    EXPECT_DOUBLE_EQ(momentum_lift<1>(u, 2, all).p[0], 0.5 + (9.0 - 1.0) / 0.25);
    EXPECT_DOUBLE_EQ(momentum_lift<1>(u, 2, none).p[0], 0.5 + (9.0 - 1.0) / 0.25);
    // One-sided towards the member neighbour.
    std::vector<char> up(8, 0);
    up[3] = 1;
    EXPECT_DOUBLE_EQ(momentum_lift<1>(u, 2, up).p[0], 0.5 + (9.0 - 4.0) / 0.125);
    std::vector<char> down(8, 0);
    down[1] = 1;
    EXPECT_DOUBLE_EQ(momentum_lift<1>(u, 2, down).p[0], 0.5 + (4.0 - 1.0) / 0.125);
    // Wide stencil wraps around the torus.
    EXPECT_DOUBLE_EQ(momentum_lift<1>(u, 0, all, 2).p[0], 0.5 + (4.0 - 4.0) / 0.5);
}

TEST(Sets, FreeModelSetsAreWholeTorusWithMomentumC) {
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{64, 1.0, 0.0};
    CohomologyClass<1> c{{0.3}};
    auto a = analyze_class<1>(m, g, c, quick_options());
    EXPECT_EQ(a.aubry.nodes.size(), 64u);
    EXPECT_TRUE(a.mane.is_full_graph);
    EXPECT_EQ(a.mane.violations(), 0u);
    for (std::size_t i = 0; i < a.mane.nodes.size(); ++i) EXPECT_NEAR(a.mane.momentum(i)[0], 0.3, 1e-9);
    // Orbits q + 0.3 t return to every start within the 200 tau horizon.
    EXPECT_EQ(a.mather.nodes.size(), 64u);
    for (const auto& rho : a.mather.rotation) EXPECT_NEAR(rho[0], 0.3, 1e-9);
    auto d = graph_diagnostics<1>(a.mane, m);
    EXPECT_LT(d.shell_defect, 1e-4);
    EXPECT_NEAR(d.lipschitz_seminorm, 0.0, 1e-6);
}

TEST(Sets, PendulumAubryIsTheHilltop) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{64, 0.02, 0.0};
    auto a = analyze_class<1>(m, g, CohomologyClass<1>{}, quick_options());
    ASSERT_EQ(a.aubry.nodes.size(), 1u);
    EXPECT_EQ(a.aubry.nodes[0], 0u);
    EXPECT_TRUE(a.aubry.contains(0));
    EXPECT_FALSE(a.aubry.contains(1));
    EXPECT_NEAR(a.aubry.momenta[0][0], 0.0, 1e-6);
    // Mather set sits inside the Aubry set and the Aubry set inside the Mane set.
    for (std::size_t x : a.mather.nodes) EXPECT_TRUE(a.aubry.contains(x));
    for (std::size_t x : a.aubry.nodes) EXPECT_LT(a.mane.find(x), a.mane.nodes.size());
}

TEST(Sets, SupercriticalPendulumGraphIsFullOnTheEnergyShell) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{128, 0.02, 0.0, Quadrature::midpoint};
    auto a = analyze_class<1>(m, g, CohomologyClass<1>{{2.0}}, quick_options());
    EXPECT_GT(a.alpha(), 1.05);
    EXPECT_TRUE(a.mane.is_full_graph);
    EXPECT_EQ(a.aubry.nodes.size(), 128u);
    auto d = graph_diagnostics<1>(a.mane, m);
    EXPECT_LT(d.shell_defect, 0.1);
    for (std::size_t i = 0; i < a.mane.nodes.size(); ++i) EXPECT_GT(a.mane.momentum(i)[0], 0.0);
}

TEST(Sets, ManeUnionIsDeterministicForASeed) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{32, 0.05, 0.0};
    g = resolve_grid<1>(m, g, CohomologyClass<1>{{0.5}});
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{{0.5}}, 0.0);
    auto p1 = mane_pairs<1>(k, 3, 42);
    auto p2 = mane_pairs<1>(k, 3, 42);
    ASSERT_EQ(p1.size(), 3u);
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_EQ(p1[s].minus.u.values, p2[s].minus.u.values);
        EXPECT_EQ(p1[s].plus.u.values, p2[s].plus.u.values);
        EXPECT_LE(p1[s].defect(), 1e-12);
    }
    EXPECT_THROW(mane_pairs<1>(k, 0, 1), ConfigError);
}

TEST(Sets, AubrySanityBoundCatchesWrongNormalization) {
    GridSpec<1> g{8, 0.1, 4.0};
    MinPlusMatrix h(8, 8, 5.0);
    BarrierTable<1> table{BarrierKind::peierls, g, {}, 0.0, h};
    WeakKamSolution<1> u;
    u.u = GridFunction<1>{g, {}, std::vector<double>(8, 0.0)};
    EXPECT_THROW(extract_aubry<1>(table, u, 1e-2), NumericalError);
    table.kind = BarrierKind::mane;
    EXPECT_THROW(extract_aubry<1>(table, u, 1e-2), ConfigError);
}

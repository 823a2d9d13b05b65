#include "wkam/mather.hpp"
#include "wkam/weakkam.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wkam;

namespace {

// Discrete free critical value: steps of j nodes have velocity j / (n tau), and
// the best constant-speed cycle gives alpha = max_j (c v_j - v_j^2 / 2).
double free_lattice_alpha(double c, int n, double tau, double v_max) {
    double best = -kInf;
    for (int j = -n; j <= n; ++j) {
        double v = j / (n * tau);
        if (std::abs(v) > v_max + 1e-9) continue;
        best = std::max(best, c * v - 0.5 * v * v);
    }
    return best;
}

} // namespace

TEST(WeakKam, FreeAlphaMatchesLatticeFormula) {
    auto m = LagrangianModel<1>::free();
    for (double c : {0.0, 0.3, -0.55, 0.9}) {
        GridSpec<1> g{64, 1.0, 2.0};
        auto s = solve_weak_kam<1>(m, g, CohomologyClass<1>{{c}}, Direction::minus);
        EXPECT_NEAR(s.alpha, free_lattice_alpha(c, 64, 1.0, 2.0), 1e-9) << c;
        EXPECT_NEAR(s.alpha, 0.5 * c * c, 1.0 / (2 * 64.0 * 64.0) + 1e-9);
        EXPECT_LT(s.residual, 1e-8);
    }
}

TEST(WeakKam, FixedPointEquation) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{64, 0.05, 8.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{{0.4}}, 0.0);
    auto s = solve_weak_kam<1>(k, Direction::minus);
    auto tu = lax_oleinik_minus<1>(k, s.u);
    for (std::size_t i = 0; i < s.u.size(); ++i) EXPECT_NEAR(s.u[i] - tu[i], s.alpha * g.tau, 1e-8);
    EXPECT_DOUBLE_EQ(*std::min_element(s.u.values.begin(), s.u.values.end()), 0.0);
}

TEST(WeakKam, PendulumCriticalValueAndBisectionAgree) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{64, 0.05, 8.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{}, 0.0);
    auto s = solve_weak_kam<1>(k, Direction::minus);
    EXPECT_NEAR(s.alpha, 1.0, 5e-3); // max U
    EXPECT_NEAR(critical_value_bisection<1>(k), s.alpha, 1e-5);
}

TEST(WeakKam, PlusSolutionHasSameCriticalValue) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{64, 0.05, 8.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{{1.5}}, 0.0);
    auto minus = solve_weak_kam<1>(k, Direction::minus);
    auto plus = solve_weak_kam<1>(k, Direction::plus);
    EXPECT_NEAR(minus.alpha, plus.alpha, 1e-7);
    EXPECT_GT(minus.alpha, 1.0); // supercritical class
}

TEST(WeakKam, ConjugatePairIsDominatedAndTouches) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{64, 0.05, 8.0};
    auto k = build_kernel<1>(m, g, CohomologyClass<1>{}, 0.0);
    auto minus = solve_weak_kam<1>(k, Direction::minus);
    k.alpha_shift = minus.alpha;
    auto pair = conjugate_pair<1>(k, minus);
    EXPECT_NEAR(pair.defect(), 0.0, 1e-12);
    // u+ <= u- everywhere with equality at the hilltop q = 0.
    EXPECT_NEAR(pair.minus.u[0] - pair.plus.u[0], 0.0, 1e-6);
    EXPECT_THROW(conjugate_pair<1>(k, pair.plus), ConfigError);
}

TEST(WeakKam, SolutionIsLipschitz) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{64, 0.05, 8.0};
    auto s = solve_weak_kam<1>(m, g, CohomologyClass<1>{}, Direction::minus);
    // |u'| = |p - c| <= sqrt(2 (alpha - min U)) = 2 on the critical level.
    EXPECT_LT(s.u.lipschitz_seminorm(), 2.0 + 0.1);
}

TEST(WeakKam, TwoTorusSeparableModel) {
    // U(q) = cos(2 pi q1) separates: alpha(0) = max U = 1.
    auto m = LagrangianModel<2>::pendulum();
    GridSpec<2> g{16, 0.1, 0.0};
    g = resolve_grid<2>(m, g, CohomologyClass<2>{});
    auto s = solve_weak_kam<2>(m, g, CohomologyClass<2>{}, Direction::minus);
    EXPECT_NEAR(s.alpha, 1.0, 2e-2);
}

TEST(WeakKam, SaturationIsReported) {
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{32, 0.0625, 1.0}; // reach 2 nodes; the optimal step for c = 1.8 is larger
    EXPECT_THROW(solve_weak_kam<1>(m, g, CohomologyClass<1>{{1.8}}, Direction::minus), NumericalError);
}

TEST(WeakKam, RejectsBadOptions) {
    auto m = LagrangianModel<1>::free();
    GridSpec<1> g{16, 0.1, 4.0};
    WeakKamOptions o;
    o.relaxation = 0.0;
    EXPECT_THROW(solve_weak_kam<1>(m, g, CohomologyClass<1>{}, Direction::minus, o), ConfigError);
    o.relaxation = 1.0;
    o.tol = 0.0;
    EXPECT_THROW(solve_weak_kam<1>(m, g, CohomologyClass<1>{}, Direction::minus, o), ConfigError);
}

TEST(WeakKam, NonConvergenceIsNumericalError) {
    auto m = LagrangianModel<1>::pendulum();
    GridSpec<1> g{32, 0.05, 8.0};
    WeakKamOptions o;
    o.max_iters = 2;
    EXPECT_THROW(solve_weak_kam<1>(m, g, CohomologyClass<1>{}, Direction::minus, o), NumericalError);
}

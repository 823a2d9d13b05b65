#include "wkam/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace wkam;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Model, PendulumLagrangianAndHamiltonian) {
    auto m = LagrangianModel<1>::pendulum();
    TorusPoint<1> q{{0.25}};
    EXPECT_NEAR(m.potential(q), 0.0, 1e-15);
    EXPECT_NEAR(m.potential(TorusPoint<1>{{0.0}}), 1.0, 1e-15);
    EXPECT_NEAR(m.lagrangian(TorusPoint<1>{{0.5}}, Velocity<1>{{2.0}}), 2.0 + 1.0, 1e-15);
    EXPECT_NEAR(m.hamiltonian(TorusPoint<1>{{0.5}}, Momentum<1>{{2.0}}), 2.0 - 1.0, 1e-15);
}

TEST(Model, PotentialGradientMatchesFiniteDifference) {
    Harmonic<2> h1{{1, 0}, 0.7}, h2{{1, 1}, -0.3};
    auto m = LagrangianModel<2>::two_harmonic(h1, h2);
    TorusPoint<2> q{{0.13, 0.71}};
    auto g = m.potential_gradient(q);
    const double e = 1e-6;
    for (int i = 0; i < 2; ++i) {
        auto qp = q, qm = q;
        qp.coords[i] += e;
        qm.coords[i] -= e;
        EXPECT_NEAR(g[i], (m.potential(qp) - m.potential(qm)) / (2 * e), 1e-6);
    }
}

TEST(Model, LegendreRoundTripAndFenchelEquality) {
    Mat<2> a{{{2.0, 0.5}, {0.5, 1.0}}};
    auto m = LagrangianModel<2>::anisotropic(a, {Harmonic<2>{{0, 1}, 0.4}});
    TorusPoint<2> q{{0.3, 0.6}};
    Velocity<2> v{{0.7, -1.3}};
    auto p = m.legendre(q, v);
    auto back = m.legendre_inverse(q, p);
    EXPECT_NEAR(back[0], v[0], 1e-14);
    EXPECT_NEAR(back[1], v[1], 1e-14);
    // H(q, p) = p.v - L(q, v) at p = dL/dv
    EXPECT_NEAR(m.hamiltonian(q, p), dot<2>(p.p, v.v) - m.lagrangian(q, v), 1e-13);
}

TEST(Model, EigenvaluesOfKineticMatrix) {
    Mat<2> a{{{2.0, 1.0}, {1.0, 2.0}}};
    auto m = LagrangianModel<2>::anisotropic(a);
    EXPECT_NEAR(m.lambda_min(), 1.0, 1e-14);
    EXPECT_NEAR(m.lambda_max(), 3.0, 1e-14);
}

TEST(Model, RejectsInvalidCatalogEntries) {
    EXPECT_THROW(LagrangianModel<2>::anisotropic(Mat<2>{{{1.0, 2.0}, {2.0, 1.0}}}), ConfigError);
    EXPECT_THROW(LagrangianModel<2>::anisotropic(Mat<2>{{{1.0, 0.1}, {0.2, 1.0}}}), ConfigError);
    EXPECT_THROW(catalog_from_name("pendulum"), ConfigError);
    EXPECT_EQ(catalog_from_name("two-harmonic"), Catalog::two_harmonic);
    EXPECT_EQ(catalog_name(Catalog::anisotropic_kinetic), "anisotropic-kinetic");
}

TEST(Flow, FreeFlowIsUniformMotion) {
    auto m = LagrangianModel<2>::free();
    auto traj = el_flow<2>(m, TorusPoint<2>{{0.1, 0.2}}, Momentum<2>{{0.5, -0.25}}, 3.0, 0.01);
    const auto& end = traj.back();
    EXPECT_DOUBLE_EQ(end.t, 3.0);
    EXPECT_NEAR(end.q[0], 0.1 + 1.5, 1e-12);
    EXPECT_NEAR(end.q[1], 0.2 - 0.75, 1e-12);
    EXPECT_DOUBLE_EQ(end.p[0], 0.5);
    EXPECT_EQ(traj.size(), 301u);
}

TEST(Flow, PendulumEnergyIsConservedAndErrorIsFourthOrder) {
    auto m = LagrangianModel<1>::pendulum();
    TorusPoint<1> q0{{0.3}};
    Momentum<1> p0{{1.2}};
    auto endpoint = [&](double dt) { return el_flow<1>(m, q0, p0, 2.0, dt).back(); };
    auto fine = endpoint(1e-4);
    double e1 = std::abs(endpoint(0.02).q[0] - fine.q[0]);
    double e2 = std::abs(endpoint(0.01).q[0] - fine.q[0]);
    EXPECT_GT(e1 / e2, 12.0); // 2^4 = 16 for a fourth-order scheme
    const double h0 = m.hamiltonian(q0, p0);
    for (const auto& s : el_flow<1>(m, q0, p0, 20.0, 1e-3))
        EXPECT_NEAR(m.hamiltonian(s.point(), Momentum<1>{s.p}), h0, 1e-9);
}

TEST(Flow, SmallOscillationPeriod) {
    // Near the bottom q = 1/2 of U = cos(2 pi q): U'' = 4 pi^2, period 1.
    auto m = LagrangianModel<1>::pendulum();
    auto s = flow_endpoint<1>(m, PhaseState<1>{0.0, {0.5 + 1e-5}, {0.0}}, 1.0, 1e-4);
    EXPECT_NEAR(s.q[0], 0.5 + 1e-5, 1e-9);
    EXPECT_NEAR(s.p[0], 0.0, 1e-6 * 2 * pi);
}

TEST(Flow, PartialFinalStepLandsOnHorizon) {
    auto m = LagrangianModel<1>::free();
    auto traj = el_flow<1>(m, TorusPoint<1>{{0.0}}, Momentum<1>{{1.0}}, 1.05, 0.1);
    EXPECT_DOUBLE_EQ(traj.back().t, 1.05);
    EXPECT_NEAR(traj.back().q[0], 1.05, 1e-12);
    EXPECT_THROW(el_flow<1>(m, TorusPoint<1>{}, Momentum<1>{}, 1.0, 2.0), ConfigError);
}

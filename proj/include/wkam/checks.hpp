#pragma once

#include "wkam/pipeline.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace wkam {

/// One invariant evaluated on computed data. `worst` is the largest violation
/// amount (0 when the invariant holds with room to spare).
struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;
    double tol = 0.0;
};

inline CheckResult make_check(std::string name, double worst, double tol) {
    return {std::move(name), worst <= tol, std::max(worst, 0.0), tol};
}

namespace detail {
// sup_q -U(q) sampled on a (4n)^D configuration grid.
template <int D>
double potential_sup(const LagrangianModel<D>& model, int n) {
    const int qs = 4 * n;
    std::size_t qcount = D == 1 ? static_cast<std::size_t>(qs) : static_cast<std::size_t>(qs) * qs;
    double pot = -kInf;
    for (std::size_t iq = 0; iq < qcount; ++iq) {
        TorusPoint<D> q;
        q.coords[0] = static_cast<double>(iq % qs) / qs;
        if constexpr (D == 2) q.coords[1] = static_cast<double>(iq / qs) / qs;
        pot = std::max(pot, -model.potential(q));
    }
    return pot;
}

// Kinetic part of L(q, v) - c.v, i.e. with the potential removed.
template <int D>
double kinetic_part(const LagrangianModel<D>& model, const CohomologyClass<D>& c, const Vec<D>& v) {
    const TorusPoint<D> origin{};
    return model.lagrangian(origin, Velocity<D>{v}) + model.potential(origin) - dot<D>(c.c, v);
}
} // namespace detail

/**
 * M1 = sup {L(q, v) - c.v : |v| <= 1}. Catalog Lagrangians separate into a
 * kinetic and a potential part, so the two suprema are taken separately: -U
 * on a (4n)^D configuration grid, the kinetic part on the unit sphere (a
 * convex function peaks on the boundary of the ball) with `samples` angles.
 */
template <int D>
double unit_speed_action_bound(const LagrangianModel<D>& model, const CohomologyClass<D>& c, int n,
                               int samples = 4096) {
    double kin = -kInf;
    if constexpr (D == 1) {
        kin = std::max(detail::kinetic_part<D>(model, c, {-1.0}), detail::kinetic_part<D>(model, c, {1.0}));
    } else {
        for (int k = 0; k < samples; ++k) {
            double th = 2.0 * std::numbers::pi * k / samples;
            kin = std::max(kin, detail::kinetic_part<D>(model, c, {std::cos(th), std::sin(th)}));
        }
    }
    return detail::potential_sup<D>(model, n) + kin;
}

/**
 * Lattice analogue of M1: sup {L(q, v) - c.v} over single-node axis steps
 * v = +-e_i / (n tau), the slowest nonzero velocities the kernel offers.
 */
template <int D>
double lattice_step_action_bound(const LagrangianModel<D>& model, const CohomologyClass<D>& c,
                                 const GridSpec<D>& grid) {
    const double s = 1.0 / (grid.n * grid.tau);
    double kin = -kInf;
    for (int i = 0; i < D; ++i)
        for (double sign : {-1.0, 1.0}) {
            Vec<D> v{};
            v[i] = sign * s;
            kin = std::max(kin, detail::kinetic_part<D>(model, c, v));
        }
    return detail::potential_sup<D>(model, grid.n) + kin;
}

/// Number of single-node axis steps between two nodes (wrapped l1 distance).
template <int D>
std::size_t lattice_l1_steps(const GridSpec<D>& grid, std::size_t x, std::size_t y) {
    auto px = grid.point(x), py = grid.point(y);
    std::size_t steps = 0;
    for (int i = 0; i < D; ++i) {
        double d = std::abs(px.coords[i] - py.coords[i]);
        d = std::min(d, 1.0 - d);
        steps += static_cast<std::size_t>(std::llround(d * grid.n));
    }
    return steps;
}

/**
 * Inequalities between the Mane potential m and the Peierls barrier h:
 * m <= h, triangle inequalities, symmetrized nonnegativity, h(x, x) >= 0,
 * the Lipschitz bound, and m = h in the columns of Aubry points. The
 * continuum bound |m(x, y)| <= (M1 + alpha) d(x, y) needs unit speed to be a
 * lattice velocity; the check uses the bound realized by a path of k single
 * node steps, |m(x, y)| <= k tau (M1' + alpha) with M1' from
 * lattice_step_action_bound. In 1D with n tau = 1 the two coincide.
 */
template <int D>
std::vector<CheckResult> barrier_checks(const ClassAnalysis<D>& a, const LagrangianModel<D>& model, double tol,
                                        int threads = 1) {
    const auto& m = a.barriers.mane.table;
    const auto& h = a.barriers.peierls.table;
    const auto& grid = a.kernel.grid;
    const std::size_t n = m.rows();
    double m_le_h = 0, tri_m = 0, tri_h = 0, sym_m = 0, sym_h = 0, diag_h = 0, lip = 0, aubry_eq = 0;
    const double per_step = grid.tau * (lattice_step_action_bound<D>(model, a.kernel.c, grid) + a.alpha());
    for (std::size_t x = 0; x < n; ++x) {
        diag_h = std::max(diag_h, -h(x, x));
        for (std::size_t y = 0; y < n; ++y) {
            m_le_h = std::max(m_le_h, m(x, y) - h(x, y));
            sym_m = std::max(sym_m, -(m(x, y) + m(y, x)));
            sym_h = std::max(sym_h, -(h(x, y) + h(y, x)));
            lip = std::max(lip, std::abs(m(x, y)) - per_step * lattice_l1_steps<D>(grid, x, y));
        }
        for (std::size_t y : a.aubry.nodes) aubry_eq = std::max(aubry_eq, std::abs(m(x, y) - h(x, y)));
    }
    // Triangle inequalities: m(x, z) <= m(x, y) + m(y, z), rows in parallel.
    std::vector<double> row_m(n, 0.0), row_h(n, 0.0);
    parallel_for(n, threads, [&](std::size_t x) {
        double wm = 0.0, wh = 0.0;
        auto mx = m.row(x);
        auto hx = h.row(x);
        for (std::size_t y = 0; y < n; ++y) {
            auto my = m.row(y);
            auto hy = h.row(y);
            for (std::size_t z = 0; z < n; ++z) {
                wm = std::max(wm, mx[z] - (mx[y] + my[z]));
                wh = std::max(wh, hx[z] - (hx[y] + hy[z]));
            }
        }
        row_m[x] = wm;
        row_h[x] = wh;
    });
    for (std::size_t x = 0; x < n; ++x) {
        tri_m = std::max(tri_m, row_m[x]);
        tri_h = std::max(tri_h, row_h[x]);
    }
    return {
        make_check("mane_le_peierls", m_le_h, tol),
        make_check("mane_triangle", tri_m, tol),
        make_check("peierls_triangle", tri_h, tol),
        make_check("mane_symmetrized_nonnegative", sym_m, tol),
        make_check("peierls_symmetrized_nonnegative", sym_h, tol),
        make_check("peierls_diagonal_nonnegative", diag_h, tol),
        make_check("mane_lipschitz_bound", lip, tol),
        make_check("mane_equals_peierls_on_aubry", aubry_eq, tol),
    };
}

/// Mather inside Aubry inside Mane (node sets), and the Mane lift on the energy shell.
template <int D>
std::vector<CheckResult> set_checks(const ClassAnalysis<D>& a, const LagrangianModel<D>& model, double shell_tol) {
    std::size_t mather_out = 0, aubry_out = 0;
    for (std::size_t x : a.mather.nodes)
        if (!a.aubry.contains(x)) ++mather_out;
    for (std::size_t x : a.aubry.nodes)
        if (a.mane.find(x) == a.mane.nodes.size()) ++aubry_out;
    auto diag = graph_diagnostics<D>(a.mane, model);
    return {
        make_check("aubry_nonempty", a.aubry.nodes.empty() ? 1.0 : 0.0, 0.0),
        make_check("mather_in_aubry", static_cast<double>(mather_out), 0.0),
        make_check("aubry_in_mane", static_cast<double>(aubry_out), 0.0),
        make_check("mane_shell_containment", diag.shell_defect, shell_tol),
        make_check("mane_single_valued", static_cast<double>(diag.violations), 0.0),
    };
}

namespace detail {
// Largest violation of f(x_k) <= (f(x_{k-1}) + f(x_{k+1})) / 2 along every axis line.
template <int D>
double midpoint_convexity_violation(const Axis& axis, const std::vector<double>& f) {
    const std::size_t m = axis.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::size_t stride = 1;
        std::size_t r = i;
        for (int d = 0; d < D; ++d) {
            std::size_t k = r % m;
            r /= m;
            if (k > 0 && k + 1 < m)
                worst = std::max(worst, f[i] - 0.5 * (f[i - stride] + f[i + stride]));
            stride *= m;
        }
    }
    return worst;
}
} // namespace detail

/// Fenchel-Young inequality on all sampled pairs, equality on dual pairs, midpoint convexity of alpha and beta.
template <int D>
std::vector<CheckResult> fenchel_checks(const AlphaBetaTable<D>& t, double tol) {
    double young = 0.0, dual = 0.0;
    for (std::size_t j = 0; j < t.h_grid.size(); ++j) {
        for (std::size_t i = 0; i < t.c_grid.size(); ++i) young = std::max(young, t.fenchel_gap(j, i));
        dual = std::max(dual, std::abs(t.fenchel_gap(j, t.dual[j])));
    }
    return {
        make_check("fenchel_young_inequality", young, tol),
        make_check("fenchel_equality_on_dual_pairs", dual, tol),
        make_check("alpha_midpoint_convex", detail::midpoint_convexity_violation<D>(t.c_axis, t.alpha_values), tol),
        make_check("beta_midpoint_convex", detail::midpoint_convexity_violation<D>(t.h_axis, t.beta_values), tol),
    };
}

} // namespace wkam

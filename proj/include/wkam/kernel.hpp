#pragma once

#include "wkam/minplus.hpp"
#include "wkam/model.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wkam {

/// Where the one-step cost evaluates L: at the left endpoint or at the midpoint of the step.
enum class Quadrature { left, midpoint };

/**
 * Uniform grid on T^D with n points per dimension (node coordinates i/n),
 * time step tau, and velocity radius v_max bounding one-step displacements
 * by v_max * tau.
 */
template <int D>
    requires TorusDim<D>
struct GridSpec {
    int n = 64;
    double tau = 0.05;
    double v_max = 4.0;
    Quadrature quadrature = Quadrature::left;

    std::size_t nodes() const {
        std::size_t s = 1;
        for (int i = 0; i < D; ++i) s *= static_cast<std::size_t>(n);
        return s;
    }

    double reach() const { return v_max * tau; }

    void validate() const {
        if (n < 8) throw ConfigError("grid.n: must be >= 8");
        if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("grid.tau: must be positive");
        if (!(v_max > 0.0) || !std::isfinite(v_max)) throw ConfigError("grid.v_max: must be positive");
        if (reach() * n < 2.0 - 1e-12)
            throw ConfigError("grid.v_max: v_max*tau must be >= 2/n so a step reaches beyond neighbours");
    }

    IVec<D> multi_index(std::size_t idx) const {
        IVec<D> m{};
        for (int i = 0; i < D; ++i) {
            m[i] = static_cast<int>(idx % static_cast<std::size_t>(n));
            idx /= static_cast<std::size_t>(n);
        }
        return m;
    }

    /// Index of the node at multi-index m, each component taken mod n.
    std::size_t flat_index(const IVec<D>& m) const {
        std::size_t idx = 0;
        for (int i = D - 1; i >= 0; --i) {
            int r = ((m[i] % n) + n) % n;
            idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(r);
        }
        return idx;
    }

    TorusPoint<D> point(std::size_t idx) const {
        auto m = multi_index(idx);
        TorusPoint<D> p;
        for (int i = 0; i < D; ++i) p.coords[i] = static_cast<double>(m[i]) / n;
        return p;
    }

    /// Nearest node to an arbitrary torus point.
    std::size_t nearest(const TorusPoint<D>& q) const {
        IVec<D> m{};
        for (int i = 0; i < D; ++i) m[i] = static_cast<int>(std::lround(wrap_unit(q.coords[i]) * n));
        return flat_index(m);
    }
};

/**
 * A velocity radius large enough that optimal steps for the class c stay
 * well inside the admissible disc: the largest calibrated momentum is
 * bounded by |c| plus the separatrix width 2 sqrt(2 lambda_max max|U|).
 * Solvers still check for saturation at runtime.
 */
template <int D>
double default_v_max(const LagrangianModel<D>& model, int n, double tau, const CohomologyClass<D>& c) {
    double p_bound = norm<D>(c.c) + 2.0 * std::sqrt(2.0 * model.lambda_max() * model.potential_amplitude());
    double v = 1.5 * p_bound / model.lambda_min() + 1.0;
    return std::max(v, 3.0 / (n * tau));
}

/// Admissible one-step lifts in node units, |j|/n <= reach, in lexicographic order.
template <int D>
std::vector<IVec<D>> admissible_lifts(const GridSpec<D>& grid) {
    const double r = grid.reach() * grid.n + 1e-9;
    const int jmax = static_cast<int>(std::floor(r));
    std::vector<IVec<D>> lifts;
    if constexpr (D == 1) {
        for (int j = -jmax; j <= jmax; ++j) lifts.push_back({j});
    } else {
        for (int a = -jmax; a <= jmax; ++a)
            for (int b = -jmax; b <= jmax; ++b)
                if (std::hypot(a, b) <= r) lifts.push_back({a, b});
    }
    return lifts;
}

/**
 * One-step cost matrix for the Lagrangian L - c.dq:
 *
 *   K_c[x][y] = min over lifts D = y - x (mod 1), |D| <= v_max tau,
 *               of tau * L(x, D/tau) - c.D
 *
 * Ties go to the lexicographically smallest lift. The normalized kernel
 * adds alpha_shift * tau to every finite entry.
 */
template <int D>
    requires TorusDim<D>
struct CostKernel {
    GridSpec<D> grid;
    CohomologyClass<D> c;
    double alpha_shift = 0.0;
    MinPlusMatrix cost;
    std::vector<IVec<D>> lift; // row-major, node units; meaningful where cost is finite
    double max_lift_norm = 0.0;

    std::size_t nodes() const { return cost.rows(); }

    const IVec<D>& lift_at(std::size_t x, std::size_t y) const { return lift[x * nodes() + y]; }

    Vec<D> displacement(std::size_t x, std::size_t y) const {
        Vec<D> d;
        const auto& j = lift_at(x, y);
        for (int i = 0; i < D; ++i) d[i] = static_cast<double>(j[i]) / grid.n;
        return d;
    }

    double normalized(std::size_t x, std::size_t y) const {
        double k = cost(x, y);
        return k == kInf ? kInf : k + alpha_shift * grid.tau;
    }

    MinPlusMatrix normalized_matrix() const {
        MinPlusMatrix m = cost;
        m.shift(alpha_shift * grid.tau);
        return m;
    }

    /// True when the chosen lift for (x, y) lies on the outer shell of admissible lifts.
    bool saturated(std::size_t x, std::size_t y) const {
        const auto& j = lift_at(x, y);
        double len = 0.0;
        for (int i = 0; i < D; ++i) len += static_cast<double>(j[i]) * j[i];
        return std::sqrt(len) > max_lift_norm - 1.0 + 1e-9;
    }
};

template <int D>
double one_step_cost(const LagrangianModel<D>& model, const GridSpec<D>& grid, const CohomologyClass<D>& c,
                     const TorusPoint<D>& x, const Vec<D>& delta) {
    Velocity<D> v;
    for (int i = 0; i < D; ++i) v.v[i] = delta[i] / grid.tau;
    TorusPoint<D> at = x;
    if (grid.quadrature == Quadrature::midpoint)
        for (int i = 0; i < D; ++i) at.coords[i] += 0.5 * delta[i];
    return grid.tau * model.lagrangian(at, v) - dot<D>(c.c, delta);
}

template <int D>
CostKernel<D> build_kernel(const LagrangianModel<D>& model, const GridSpec<D>& grid, const CohomologyClass<D>& c,
                           double alpha_shift, int threads = 1) {
    grid.validate();
    auto lifts = admissible_lifts<D>(grid);
    if (lifts.empty()) throw ConfigError("build_kernel: no admissible displacement");
    const std::size_t n_nodes = grid.nodes();
    CostKernel<D> k{grid, c, alpha_shift, MinPlusMatrix(n_nodes, n_nodes), std::vector<IVec<D>>(n_nodes * n_nodes),
                    0.0};
    for (const auto& j : lifts) {
        double len = 0.0;
        for (int i = 0; i < D; ++i) len += static_cast<double>(j[i]) * j[i];
        k.max_lift_norm = std::max(k.max_lift_norm, std::sqrt(len));
    }
    parallel_for(n_nodes, threads, [&](std::size_t x) {
        const auto mx = grid.multi_index(x);
        const auto qx = grid.point(x);
        auto row = k.cost.row(x);
        for (const auto& j : lifts) {
            IVec<D> my;
            Vec<D> delta;
            for (int i = 0; i < D; ++i) {
                my[i] = mx[i] + j[i];
                delta[i] = static_cast<double>(j[i]) / grid.n;
            }
            std::size_t y = grid.flat_index(my);
            double cost = one_step_cost<D>(model, grid, c, qx, delta);
            if (cost < row[y]) {
                row[y] = cost;
                k.lift[x * n_nodes + y] = j;
            }
        }
    });
    return k;
}

/// Source of raw (alpha_shift = 0) kernels. An empty factory means build_kernel; callers plug in caches here.
template <int D>
using KernelFactory =
    std::function<CostKernel<D>(const LagrangianModel<D>&, const GridSpec<D>&, const CohomologyClass<D>&)>;

template <int D>
CostKernel<D> make_kernel(const KernelFactory<D>& factory, const LagrangianModel<D>& model, const GridSpec<D>& grid,
                          const CohomologyClass<D>& c, int threads = 1) {
    return factory ? factory(model, grid, c) : build_kernel<D>(model, grid, c, 0.0, threads);
}

/**
 * Discrete finite-horizon action h_t for t = steps * tau: the min-plus power
 * of the normalized kernel, computed by left-to-right products so that each
 * entry is the left-folded sum of its path's one-step costs. `links[k-2]`
 * holds the argmin middle node of the k-th product (k >= 2).
 */
template <int D>
struct FiniteHorizonAction {
    std::shared_ptr<const CostKernel<D>> kernel;
    std::size_t steps = 0;
    double t = 0.0;
    MinPlusMatrix table;
    std::vector<std::vector<std::int32_t>> links;
};

template <int D>
FiniteHorizonAction<D> finite_horizon(std::shared_ptr<const CostKernel<D>> kernel, std::size_t steps,
                                      int threads = 1) {
    if (steps < 1) throw ConfigError("finite_horizon: steps must be >= 1");
    FiniteHorizonAction<D> f;
    f.kernel = kernel;
    f.steps = steps;
    f.t = static_cast<double>(steps) * kernel->grid.tau;
    const MinPlusMatrix step = kernel->normalized_matrix();
    f.table = step;
    for (std::size_t k = 2; k <= steps; ++k) {
        auto prod = mp_product_argmin(f.table, step, threads);
        f.table = std::move(prod.value);
        f.links.push_back(std::move(prod.argmin));
    }
    return f;
}

template <int D>
FiniteHorizonAction<D> finite_horizon(const CostKernel<D>& kernel, std::size_t steps, int threads = 1) {
    return finite_horizon<D>(std::make_shared<const CostKernel<D>>(kernel), steps, threads);
}

/// A discrete curve: m+1 nodes, m constant-velocity steps.
template <int D>
struct DiscretePath {
    std::vector<std::size_t> nodes;
    std::vector<TorusPoint<D>> points;
    std::vector<Velocity<D>> velocities;
    std::vector<double> step_costs; // normalized one-step costs
    double total = 0.0;             // left-folded sum of step_costs
};

template <int D>
DiscretePath<D> recover_path(const FiniteHorizonAction<D>& f, std::size_t x, std::size_t y) {
    const auto& k = *f.kernel;
    if (x >= k.nodes() || y >= k.nodes()) throw ConfigError("recover_path: node out of range");
    if (f.table(x, y) == kInf) throw NumericalError("recover_path: endpoint unreachable in the given horizon");
    std::vector<std::size_t> nodes(f.steps + 1);
    nodes[f.steps] = y;
    std::size_t cur = y;
    for (std::size_t s = f.steps; s >= 2; --s) {
        cur = static_cast<std::size_t>(f.links[s - 2][x * k.nodes() + cur]);
        nodes[s - 1] = cur;
    }
    nodes[0] = x;
    DiscretePath<D> path;
    path.nodes = nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) path.points.push_back(k.grid.point(nodes[i]));
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        Vec<D> d = k.displacement(nodes[i], nodes[i + 1]);
        Velocity<D> v;
        for (int j = 0; j < D; ++j) v.v[j] = d[j] / k.grid.tau;
        path.velocities.push_back(v);
        double c = k.normalized(nodes[i], nodes[i + 1]);
        path.step_costs.push_back(c);
        path.total = i == 0 ? c : path.total + c;
    }
    return path;
}

} // namespace wkam

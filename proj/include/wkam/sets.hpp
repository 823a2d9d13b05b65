#pragma once

#include "wkam/barrier.hpp"
#include "wkam/mather.hpp"
#include "wkam/weakkam.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace wkam {

/// Default membership threshold: ten weak-KAM residuals plus a grid term.
inline double default_set_tol(double residual, int n, double grid_constant = 0.5) {
    return 10.0 * residual + grid_constant / n;
}

/// Momenta closer than one velocity lattice step, 1/(n tau), are not resolved
/// by the discrete fixed-point equation.
inline double default_distinct_tol(int n, double tau) { return std::max(1e-2, 1.0 / (n * tau)); }

/**
 * c + Du at a node by finite differences over `stencil` nodes. Differences
 * are symmetric when both stencil ends belong to `member` (or neither does)
 * and one-sided towards the member end otherwise.
 */
template <int D>
Momentum<D> momentum_lift(const GridFunction<D>& u, std::size_t node, const std::vector<char>& member,
                          int stencil = 1) {
    const auto& g = u.grid;
    const double h = static_cast<double>(stencil) / g.n;
    auto m = g.multi_index(node);
    Momentum<D> p;
    for (int i = 0; i < D; ++i) {
        auto mp = m;
        auto mm = m;
        mp[i] += stencil;
        mm[i] -= stencil;
        std::size_t up = g.flat_index(mp);
        std::size_t dn = g.flat_index(mm);
        bool has_up = member[up] != 0;
        bool has_dn = member[dn] != 0;
        double slope;
        if (has_up == has_dn)
            slope = (u.values[up] - u.values[dn]) / (2.0 * h);
        else if (has_up)
            slope = (u.values[up] - u.values[node]) / h;
        else
            slope = (u.values[node] - u.values[dn]) / h;
        p.p[i] = u.c.c[i] + slope;
    }
    return p;
}

/// Projected Aubry set {x : h(x, x) <= set_tol} with its momentum lift c + Du-.
template <int D>
    requires TorusDim<D>
struct AubrySet {
    CohomologyClass<D> c;
    double set_tol = 0.0;
    std::vector<std::size_t> nodes;
    std::vector<TorusPoint<D>> points;
    std::vector<Momentum<D>> momenta;

    bool contains(std::size_t node) const { return std::binary_search(nodes.begin(), nodes.end(), node); }
};

template <int D>
AubrySet<D> extract_aubry(const BarrierTable<D>& h, const WeakKamSolution<D>& u_minus, double set_tol,
                          double sanity_bound = -1.0, int stencil = 1) {
    if (h.kind != BarrierKind::peierls) throw ConfigError("extract_aubry: needs a Peierls barrier table");
    if (u_minus.u.size() != h.nodes()) throw ConfigError("extract_aubry: shape mismatch");
    if (!(set_tol > 0.0)) throw ConfigError("extract_aubry: set_tol must be positive");
    if (sanity_bound <= 0.0) sanity_bound = 100.0 * set_tol;
    const std::size_t n = h.nodes();
    std::size_t argmin = 0;
    for (std::size_t x = 1; x < n; ++x)
        if (h(x, x) < h(argmin, argmin)) argmin = x;
    if (h(argmin, argmin) > sanity_bound)
        throw NumericalError("extract_aubry: diagonal barrier minimum exceeds the sanity bound; wrong alpha?");
    AubrySet<D> a;
    a.c = h.c;
    a.set_tol = set_tol;
    std::vector<char> member(n, 0);
    for (std::size_t x = 0; x < n; ++x)
        if (h(x, x) <= set_tol || x == argmin) {
            member[x] = 1;
            a.nodes.push_back(x);
        }
    for (std::size_t x : a.nodes) {
        a.points.push_back(h.grid.point(x));
        a.momenta.push_back(momentum_lift<D>(u_minus.u, x, member, stencil));
    }
    return a;
}

/**
 * Union over conjugate pairs of the coincidence sets {u- - u+ <= set_tol}
 * with their momentum lifts. Each node keeps its distinct momenta (closer
 * than distinct_tol counts as equal); more than one is a graph violation.
 */
template <int D>
    requires TorusDim<D>
struct ManeGraph {
    CohomologyClass<D> c;
    double alpha = 0.0;
    GridSpec<D> grid;
    double set_tol = 0.0;
    std::vector<std::size_t> nodes;
    std::vector<std::vector<Momentum<D>>> momenta;
    bool is_full_graph = false;

    const Momentum<D>& momentum(std::size_t i) const { return momenta[i].front(); }

    std::size_t violations() const {
        return static_cast<std::size_t>(
            std::count_if(momenta.begin(), momenta.end(), [](const auto& m) { return m.size() > 1; }));
    }

    /// Position of `node` in `nodes`, or nodes.size().
    std::size_t find(std::size_t node) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
        return it != nodes.end() && *it == node ? static_cast<std::size_t>(it - nodes.begin()) : nodes.size();
    }
};

struct ManeOptions {
    double set_tol = 0.0;      // <= 0: default_set_tol from the residuals
    double distinct_tol = 0.0; // <= 0: default_distinct_tol
    int stencil = 1;
};

template <int D>
ManeGraph<D> extract_mane(const std::vector<ConjugatePair<D>>& pairs, const ManeOptions& opt = {}) {
    if (pairs.empty()) throw ConfigError("extract_mane: needs at least one conjugate pair");
    const auto& first = pairs.front().minus;
    const std::size_t n = first.u.size();
    ManeGraph<D> g;
    g.c = first.c;
    g.alpha = first.alpha;
    g.grid = first.u.grid;
    double worst_residual = 0.0;
    for (const auto& pr : pairs) worst_residual = std::max({worst_residual, pr.minus.residual, pr.plus.residual});
    g.set_tol = opt.set_tol > 0.0 ? opt.set_tol : default_set_tol(worst_residual, g.grid.n);
    const double distinct = opt.distinct_tol > 0.0 ? opt.distinct_tol : default_distinct_tol(g.grid.n, g.grid.tau);
    std::vector<std::vector<Momentum<D>>> per_node(n);
    for (const auto& pr : pairs) {
        std::vector<char> member(n, 0);
        for (std::size_t x = 0; x < n; ++x) member[x] = pr.minus.u[x] - pr.plus.u[x] <= g.set_tol;
        for (std::size_t x = 0; x < n; ++x) {
            if (!member[x]) continue;
            auto p = momentum_lift<D>(pr.minus.u, x, member, opt.stencil);
            auto& list = per_node[x];
            bool seen = std::any_of(list.begin(), list.end(),
                                    [&](const Momentum<D>& m) { return max_abs<D>(sub(m.p, p.p)) <= distinct; });
            if (!seen) list.push_back(p);
        }
    }
    for (std::size_t x = 0; x < n; ++x)
        if (!per_node[x].empty()) {
            g.nodes.push_back(x);
            g.momenta.push_back(std::move(per_node[x]));
        }
    g.is_full_graph = g.nodes.size() == n;
    return g;
}

/**
 * Conjugate pairs for the Mane union: the first from u0 = 0, the others from
 * random initial functions (uniform on [0, spread)) drawn from `seed`.
 */
template <int D>
std::vector<ConjugatePair<D>> mane_pairs(const CostKernel<D>& kernel, int seeds, std::uint64_t seed,
                                         const WeakKamOptions& opt = {}, double spread = 1.0) {
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    std::vector<ConjugatePair<D>> pairs;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, spread);
    CostKernel<D> normalized = kernel;
    for (int s = 0; s < seeds; ++s) {
        GridFunction<D> u0{kernel.grid, kernel.c, std::vector<double>(kernel.nodes(), 0.0)};
        if (s > 0)
            for (double& v : u0.values) v = dist(rng);
        auto minus = solve_weak_kam<D>(kernel, Direction::minus, std::move(u0), opt);
        normalized.alpha_shift = minus.alpha;
        pairs.push_back(conjugate_pair<D>(normalized, minus, opt));
    }
    return pairs;
}

struct GraphReport {
    double lipschitz_seminorm = 0.0;
    double shell_defect = 0.0;
    std::size_t violations = 0;
};

template <int D>
GraphReport graph_diagnostics(const ManeGraph<D>& g, const LagrangianModel<D>& model) {
    if (g.nodes.empty()) throw ConfigError("graph_diagnostics: empty Mane graph");
    GraphReport r;
    r.violations = g.violations();
    const double h = 1.0 / g.grid.n;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        auto q = g.grid.point(g.nodes[i]);
        for (const auto& p : g.momenta[i])
            r.shell_defect = std::max(r.shell_defect, std::abs(model.hamiltonian(q, p) - g.alpha));
        auto m = g.grid.multi_index(g.nodes[i]);
        for (int d = 0; d < D; ++d) {
            auto mn = m;
            mn[d] += 1;
            std::size_t j = g.find(g.grid.flat_index(mn));
            if (j == g.nodes.size() || j == i) continue;
            double slope = max_abs<D>(sub(g.momentum(j).p, g.momentum(i).p)) / h;
            r.lipschitz_seminorm = std::max(r.lipschitz_seminorm, slope);
        }
    }
    return r;
}

/// Recurrent part of the Mane graph with rotation estimates.
template <int D>
    requires TorusDim<D>
struct MatherSet {
    CohomologyClass<D> c;
    std::vector<std::size_t> nodes;
    std::vector<TorusPoint<D>> points;
    std::vector<Momentum<D>> momenta;
    std::vector<Vec<D>> rotation;

    bool contains(std::size_t node) const { return std::binary_search(nodes.begin(), nodes.end(), node); }
};

struct MatherOptions {
    double horizon = 0.0;   // <= 0: 200 tau
    double dt = 1e-3;
    double recur_tol = 0.0; // <= 0: 2/n
};

/**
 * Flows each Mane point for the horizon and keeps those whose orbit comes
 * back within recur_tol of the start (max of torus distance and momentum
 * distance) at some time in the second half of the horizon.
 */
template <int D>
MatherSet<D> extract_mather(const ManeGraph<D>& mane, const LagrangianModel<D>& model, const MatherOptions& opt = {},
                            int threads = 1) {
    if (mane.nodes.empty()) throw ConfigError("extract_mather: empty Mane graph");
    const double horizon = opt.horizon > 0.0 ? opt.horizon : 200.0 * mane.grid.tau;
    const double recur_tol = opt.recur_tol > 0.0 ? opt.recur_tol : 2.0 / mane.grid.n;
    if (!(opt.dt > 0.0) || opt.dt > horizon) throw ConfigError("extract_mather: need 0 < dt <= horizon");
    std::vector<char> recurrent(mane.nodes.size(), 0);
    std::vector<Vec<D>> rho(mane.nodes.size());
    parallel_for(mane.nodes.size(), threads, [&](std::size_t i) {
        auto q0 = mane.grid.point(mane.nodes[i]);
        auto p0 = mane.momentum(i);
        auto traj = el_flow<D>(model, q0, p0, horizon, opt.dt);
        for (const auto& s : traj) {
            if (s.t < 0.5 * horizon) continue;
            double dq = torus_distance<D>(q0, TorusPoint<D>{s.q});
            double dp = max_abs<D>(sub(s.p, p0.p));
            if (std::max(dq, dp) < recur_tol) {
                recurrent[i] = 1;
                break;
            }
        }
        for (int d = 0; d < D; ++d) rho[i][d] = (traj.back().q[d] - traj.front().q[d]) / traj.back().t;
    });
    MatherSet<D> ms;
    ms.c = mane.c;
    for (std::size_t i = 0; i < mane.nodes.size(); ++i) {
        if (!recurrent[i]) continue;
        ms.nodes.push_back(mane.nodes[i]);
        ms.points.push_back(mane.grid.point(mane.nodes[i]));
        ms.momenta.push_back(mane.momentum(i));
        ms.rotation.push_back(rho[i]);
    }
    return ms;
}

} // namespace wkam

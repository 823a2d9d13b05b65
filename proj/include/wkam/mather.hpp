#pragma once

#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace wkam {

/// Uniform samples lo, lo + step, ..., hi of one coordinate axis.
struct Axis {
    double lo = -1.0;
    double hi = 1.0;
    double step = 0.05;

    static Axis symmetric(double half_width, std::size_t samples) {
        return {-half_width, half_width, 2.0 * half_width / static_cast<double>(samples - 1)};
    }

    std::size_t size() const { return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1; }

    double at(std::size_t k) const { return k + 1 == size() ? hi : lo + static_cast<double>(k) * step; }

    std::vector<double> values() const {
        std::vector<double> v(size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = at(k);
        return v;
    }

    void validate(const char* name) const {
        if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
            throw ConfigError(std::string(name) + ": needs finite lo <= hi and positive step");
        if (std::abs((hi - lo) / step - std::round((hi - lo) / step)) > 1e-6)
            throw ConfigError(std::string(name) + ": (max - min) must be a multiple of step");
    }
};

/// Tensor product of an axis with itself, first coordinate fastest.
template <int D>
std::vector<Vec<D>> tensor_grid(const Axis& axis) {
    const std::size_t m = axis.size();
    std::size_t total = D == 1 ? m : m * m;
    std::vector<Vec<D>> out(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t r = i;
        for (int d = 0; d < D; ++d) {
            out[i][d] = axis.at(r % m);
            r /= m;
        }
    }
    return out;
}

template <int D>
std::vector<CohomologyClass<D>> class_grid(const Axis& axis) {
    std::vector<CohomologyClass<D>> out;
    for (const auto& v : tensor_grid<D>(axis)) out.push_back({v});
    return out;
}

/// Grid with v_max <= 0 resolved to the per-class default.
template <int D>
GridSpec<D> resolve_grid(const LagrangianModel<D>& model, GridSpec<D> grid, const CohomologyClass<D>& c) {
    if (!(grid.v_max > 0.0)) grid.v_max = default_v_max<D>(model, grid.n, grid.tau, c);
    return grid;
}

/// alpha(c) at each class by the weak KAM solver; classes run in parallel.
template <int D>
std::vector<double> sample_alpha(const LagrangianModel<D>& model, const GridSpec<D>& grid,
                                 const std::vector<CohomologyClass<D>>& classes, const WeakKamOptions& opt = {},
                                 int threads = 1, const KernelFactory<D>& factory = {}) {
    std::vector<double> alpha(classes.size());
    parallel_for(classes.size(), threads, [&](std::size_t i) {
        auto g = resolve_grid<D>(model, grid, classes[i]);
        alpha[i] = solve_weak_kam<D>(make_kernel<D>(factory, model, g, classes[i]), Direction::minus, opt).alpha;
    });
    return alpha;
}

/**
 * Sampled alpha on a c-grid and its discrete Legendre-Fenchel conjugate
 * beta(h) = max_c (c.h - alpha(c)) on an h-grid. `dual[j]` is the index of
 * the maximizing class for h_grid[j] (first one on ties).
 */
template <int D>
    requires TorusDim<D>
struct AlphaBetaTable {
    Axis c_axis;
    std::vector<CohomologyClass<D>> c_grid;
    std::vector<double> alpha_values;
    Axis h_axis;
    std::vector<Vec<D>> h_grid;
    std::vector<double> beta_values;
    std::vector<std::size_t> dual;
    double tol = 1e-3;

    /// c.h - alpha(c) - beta(h); <= 0 by construction, 0 exactly on dual pairs.
    double fenchel_gap(std::size_t h_index, std::size_t c_index) const {
        return dot<D>(c_grid[c_index].c, h_grid[h_index]) - alpha_values[c_index] - beta_values[h_index];
    }

    /// beta at an arbitrary homology vector (max over the sampled classes).
    double beta_at(const Vec<D>& h) const {
        double b = -kInf;
        for (std::size_t i = 0; i < c_grid.size(); ++i) b = std::max(b, dot<D>(c_grid[i].c, h) - alpha_values[i]);
        return b;
    }
};

namespace detail {
template <int D>
bool on_boundary(const Axis& axis, std::size_t flat) {
    const std::size_t m = axis.size();
    for (int d = 0; d < D; ++d) {
        std::size_t k = flat % m;
        if (k == 0 || k + 1 == m) return true;
        flat /= m;
    }
    return false;
}
} // namespace detail

template <int D>
AlphaBetaTable<D> compute_beta(const Axis& c_axis, std::vector<double> alpha_values, const Axis& h_axis,
                               double tol = 1e-3) {
    c_axis.validate("c_grid");
    h_axis.validate("h_grid");
    AlphaBetaTable<D> t;
    t.c_axis = c_axis;
    t.c_grid = class_grid<D>(c_axis);
    if (alpha_values.size() != t.c_grid.size()) throw ConfigError("compute_beta: alpha sample count mismatch");
    t.alpha_values = std::move(alpha_values);
    t.h_axis = h_axis;
    t.h_grid = tensor_grid<D>(h_axis);
    t.tol = tol;
    for (const auto& h : t.h_grid) {
        double best = -kInf;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < t.c_grid.size(); ++i) {
            double v = dot<D>(t.c_grid[i].c, h) - t.alpha_values[i];
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        // c.h - alpha(c) is concave, so an interior maximizer is global even
        // when a flat stretch of maximizers reaches the boundary.
        const double tie = 1e-12 * std::max(1.0, std::abs(best));
        for (std::size_t i = 0; i < t.c_grid.size() && detail::on_boundary<D>(c_axis, arg); ++i)
            if (!detail::on_boundary<D>(c_axis, i) && dot<D>(t.c_grid[i].c, h) - t.alpha_values[i] >= best - tie)
                arg = i;
        if (detail::on_boundary<D>(c_axis, arg)) {
            std::ostringstream msg;
            msg << "c_grid too narrow: the conjugate maximum for h = (" << h[0];
            if constexpr (D == 2) msg << ", " << h[1];
            msg << ") sits on the boundary of the c_grid; widen it";
            throw ConfigError(msg.str());
        }
        t.beta_values.push_back(best);
        t.dual.push_back(arg);
    }
    return t;
}

/// Sampled subderivative of beta at h_grid[h_index]: all c with |c.h - alpha(c) - beta(h)| <= tol.
template <int D>
std::vector<std::size_t> subderivative_set(const AlphaBetaTable<D>& t, std::size_t h_index) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < t.c_grid.size(); ++i)
        if (std::abs(t.fenchel_gap(h_index, i)) <= t.tol) out.push_back(i);
    return out;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// Per-coordinate extent of the sampled subderivative; for D = 1 this is [c_lo, c_hi].
template <int D>
std::array<Interval, D> subderivative_interval(const AlphaBetaTable<D>& t, std::size_t h_index) {
    std::array<Interval, D> box;
    for (auto& b : box) b = {kInf, -kInf};
    for (std::size_t i : subderivative_set<D>(t, h_index))
        for (int d = 0; d < D; ++d) {
            box[d].lo = std::min(box[d].lo, t.c_grid[i][d]);
            box[d].hi = std::max(box[d].hi, t.c_grid[i][d]);
        }
    return box;
}

/// h-grid indices whose subderivative extends over more than corner_tol in some coordinate.
template <int D>
std::vector<std::size_t> beta_differentiability_scan(const AlphaBetaTable<D>& t, double corner_tol) {
    std::vector<std::size_t> corners;
    for (std::size_t j = 0; j < t.h_grid.size(); ++j) {
        auto box = subderivative_interval<D>(t, j);
        for (int d = 0; d < D; ++d)
            if (box[d].width() > corner_tol) {
                corners.push_back(j);
                break;
            }
    }
    return corners;
}

/// Time-average velocity along a Hamiltonian orbit.
template <int D>
struct RotationEstimate {
    TorusPoint<D> q;
    Momentum<D> p;
    double horizon = 0.0;
    Vec<D> rho{};
};

template <int D>
RotationEstimate<D> rotation_vector(const LagrangianModel<D>& model, const TorusPoint<D>& q, const Momentum<D>& p,
                                    double horizon, double dt) {
    if (!(dt > 0.0) || horizon < 100.0 * dt) throw ConfigError("rotation_vector: horizon must be >= 100 dt");
    PhaseState<D> start{0.0, q.coords, p.p};
    auto end = flow_endpoint<D>(model, start, horizon, dt);
    RotationEstimate<D> r{q, p, horizon, {}};
    for (int i = 0; i < D; ++i) r.rho[i] = (end.q[i] - start.q[i]) / horizon;
    return r;
}

} // namespace wkam

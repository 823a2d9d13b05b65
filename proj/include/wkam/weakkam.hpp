#pragma once

#include "wkam/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace wkam {

/// Real function on the grid nodes, tagged with its grid and class.
template <int D>
    requires TorusDim<D>
struct GridFunction {
    GridSpec<D> grid;
    CohomologyClass<D> c;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    /// Largest |u(x) - u(y)| / d(x, y) over grid neighbours x, y.
    double lipschitz_seminorm() const {
        double s = 0.0;
        const double h = 1.0 / grid.n;
        for (std::size_t x = 0; x < values.size(); ++x) {
            auto m = grid.multi_index(x);
            for (int i = 0; i < D; ++i) {
                auto mn = m;
                mn[i] += 1;
                s = std::max(s, std::abs(values[grid.flat_index(mn)] - values[x]) / h);
            }
        }
        return s;
    }
};

enum class Direction { minus, plus };

inline const char* direction_name(Direction d) { return d == Direction::minus ? "minus" : "plus"; }

/// (T^- u)(q) = min_{q'} u(q') + K_c[q'][q].
template <int D>
GridFunction<D> lax_oleinik_minus(const CostKernel<D>& kernel, const GridFunction<D>& u) {
    if (u.size() != kernel.nodes()) throw ConfigError("lax_oleinik_minus: shape mismatch");
    return {u.grid, u.c, mp_vec_mat(u.values, kernel.cost)};
}

/// (T^+ u)(q) = max_{q'} u(q') - K_c[q][q'].
template <int D>
GridFunction<D> lax_oleinik_plus(const CostKernel<D>& kernel, const GridFunction<D>& u) {
    if (u.size() != kernel.nodes()) throw ConfigError("lax_oleinik_plus: shape mismatch");
    const std::size_t n = kernel.nodes();
    GridFunction<D> out{u.grid, u.c, std::vector<double>(n, -kInf)};
    for (std::size_t q = 0; q < n; ++q) {
        auto row = kernel.cost.row(q);
        double best = -kInf;
        for (std::size_t r = 0; r < n; ++r)
            if (row[r] != kInf) best = std::max(best, u.values[r] - row[r]);
        out.values[q] = best;
    }
    return out;
}

struct WeakKamOptions {
    double tol = 1e-9;           // stop when osc(u - Tu) < tol * tau
    std::size_t max_iters = 200000;
    double relaxation = 0.5;     // u <- (1 - theta) u + theta T u; 1 is the plain iteration
    bool check_saturation = true;
};

/**
 * Fixed point of the Lax-Oleinik operator up to the drift alpha * tau:
 * T^- u = u - alpha tau (minus) or T^+ u = u + alpha tau (plus).
 */
template <int D>
    requires TorusDim<D>
struct WeakKamSolution {
    GridFunction<D> u;
    Direction direction = Direction::minus;
    CohomologyClass<D> c;
    double alpha = 0.0;
    double residual = 0.0; // sup-norm of the fixed-point defect
    std::size_t iterations = 0;
};

namespace detail {

struct DefectStats {
    double lo = kInf;
    double hi = -kInf;
    double mid() const { return 0.5 * (lo + hi); }
    double osc() const { return hi - lo; }
};

// Defect d = s (u - Tu) with s = +1 for T^-, -1 for T^+; at a fixed point d == alpha tau.
inline DefectStats defect(const std::vector<double>& u, const std::vector<double>& tu, Direction dir) {
    DefectStats s;
    double sign = dir == Direction::minus ? 1.0 : -1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double d = sign * (u[i] - tu[i]);
        s.lo = std::min(s.lo, d);
        s.hi = std::max(s.hi, d);
    }
    return s;
}

template <int D>
GridFunction<D> apply(const CostKernel<D>& k, const GridFunction<D>& u, Direction dir) {
    return dir == Direction::minus ? lax_oleinik_minus<D>(k, u) : lax_oleinik_plus<D>(k, u);
}

template <int D>
void check_saturation(const CostKernel<D>& k, const std::vector<double>& u, Direction dir) {
    const std::size_t n = k.nodes();
    for (std::size_t q = 0; q < n; ++q) {
        double best = kInf;
        std::size_t arg = 0;
        for (std::size_t r = 0; r < n; ++r) {
            double v = dir == Direction::minus ? u[r] + k.cost(r, q) : k.cost(q, r) - u[r];
            if (v < best) {
                best = v;
                arg = r;
            }
        }
        bool sat = dir == Direction::minus ? k.saturated(arg, q) : k.saturated(q, arg);
        if (sat) throw NumericalError("v_max saturated: an optimal step reaches the velocity bound; increase grid.v_max");
    }
}

template <int D>
WeakKamSolution<D> iterate_fixed_point(const CostKernel<D>& kernel, GridFunction<D> u, Direction dir,
                                       const WeakKamOptions& opt, bool normalize) {
    if (!(opt.tol > 0.0)) throw ConfigError("weak KAM tolerance must be positive");
    if (!(opt.relaxation > 0.0 && opt.relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
    const double tau = kernel.grid.tau;
    DefectStats last;
    for (std::size_t it = 1; it <= opt.max_iters; ++it) {
        GridFunction<D> tu = apply<D>(kernel, u, dir);
        last = defect(u.values, tu.values, dir);
        if (last.osc() < opt.tol * tau) {
            if (opt.check_saturation) check_saturation<D>(kernel, u.values, dir);
            if (normalize) {
                double m = *std::min_element(u.values.begin(), u.values.end());
                for (double& x : u.values) x -= m;
            }
            WeakKamSolution<D> s{std::move(u), dir, kernel.c, last.mid() / tau, 0.5 * last.osc(), it};
            return s;
        }
        const double theta = opt.relaxation;
        for (std::size_t i = 0; i < u.size(); ++i) u.values[i] = (1.0 - theta) * u.values[i] + theta * tu.values[i];
        double shift = normalize ? *std::min_element(u.values.begin(), u.values.end())
                                 : (dir == Direction::minus ? -theta * last.mid() : theta * last.mid());
        for (double& x : u.values) x -= shift;
    }
    std::ostringstream msg;
    msg << "weak KAM iteration did not converge after " << opt.max_iters
        << " iterations (last oscillation " << last.osc() / tau << " per unit time)";
    throw NumericalError(msg.str());
}

} // namespace detail

/**
 * Relaxed value iteration u <- (1 - theta) u + theta T u from u0 = 0,
 * renormalized to min u = 0 after each sweep. Plain iteration (theta = 1)
 * can cycle forever when the optimal discrete orbits are periodic.
 * alpha is the midrange of (u - Tu)/tau; the iteration stops once the
 * oscillation of that defect drops below tol * tau.
 */
template <int D>
WeakKamSolution<D> solve_weak_kam(const CostKernel<D>& kernel, Direction dir, const WeakKamOptions& opt = {}) {
    GridFunction<D> u0{kernel.grid, kernel.c, std::vector<double>(kernel.nodes(), 0.0)};
    return detail::iterate_fixed_point<D>(kernel, std::move(u0), dir, opt, true);
}

/// Same, from an arbitrary initial grid function.
template <int D>
WeakKamSolution<D> solve_weak_kam(const CostKernel<D>& kernel, Direction dir, GridFunction<D> u0,
                                  const WeakKamOptions& opt = {}) {
    if (u0.size() != kernel.nodes()) throw ConfigError("solve_weak_kam: initial function has wrong size");
    return detail::iterate_fixed_point<D>(kernel, std::move(u0), dir, opt, true);
}

template <int D>
WeakKamSolution<D> solve_weak_kam(const LagrangianModel<D>& model, const GridSpec<D>& grid,
                                  const CohomologyClass<D>& c, Direction dir, const WeakKamOptions& opt = {}) {
    return solve_weak_kam<D>(build_kernel<D>(model, grid, c, 0.0), dir, opt);
}

struct BisectionOptions {
    double tol = 1e-6;
    double divergence_tol = 1e-12;
    int max_doublings = 60;
};

/**
 * Critical value as the threshold shift a at which the normalized kernel
 * K_c + a tau stops having negative cycles (min-plus powers diverging to -inf).
 * Bracketed by doubling outward from 0, then bisected to width tol.
 */
template <int D>
double critical_value_bisection(const CostKernel<D>& raw, const BisectionOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw ConfigError("bisection tolerance must be positive");
    const double tau = raw.grid.tau;
    auto diverges = [&](double a) {
        MinPlusMatrix m = raw.cost;
        m.shift(a * tau);
        return mp_diverges(m, opt.divergence_tol);
    };
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;
    if (diverges(0.0)) {
        int i = 0;
        for (hi = step; diverges(hi); hi = lo + step) {
            lo = hi;
            step *= 2.0;
            if (++i > opt.max_doublings) throw NumericalError("critical_value_bisection: bracket failure");
        }
    } else {
        int i = 0;
        for (lo = -step; !diverges(lo); lo = hi - step) {
            hi = lo;
            step *= 2.0;
            if (++i > opt.max_doublings) throw NumericalError("critical_value_bisection: bracket failure");
        }
    }
    while (hi - lo > opt.tol) {
        double mid = 0.5 * (lo + hi);
        (diverges(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

template <int D>
double critical_value_bisection(const LagrangianModel<D>& model, const GridSpec<D>& grid,
                                const CohomologyClass<D>& c, const BisectionOptions& opt = {}) {
    return critical_value_bisection<D>(build_kernel<D>(model, grid, c, 0.0), opt);
}

template <int D>
struct ConjugatePair {
    WeakKamSolution<D> minus;
    WeakKamSolution<D> plus;

    /// max (u+ - u-), <= 0 up to tolerance for a conjugate pair.
    double defect() const {
        double d = -kInf;
        for (std::size_t i = 0; i < minus.u.size(); ++i) d = std::max(d, plus.u[i] - minus.u[i]);
        return d;
    }
};

/**
 * Positive partner of a negative weak KAM solution: the limit of the T^+
 * iterates started from u-, shifted so that max(u+ - u-) = 0.
 */
template <int D>
ConjugatePair<D> conjugate_pair(const CostKernel<D>& kernel, const WeakKamSolution<D>& minus,
                                const WeakKamOptions& opt = {}) {
    if (minus.direction != Direction::minus) throw ConfigError("conjugate_pair: expects a negative solution");
    auto plus = detail::iterate_fixed_point<D>(kernel, minus.u, Direction::plus, opt, false);
    double top = -kInf;
    for (std::size_t i = 0; i < plus.u.size(); ++i) top = std::max(top, plus.u.values[i] - minus.u.values[i]);
    for (double& x : plus.u.values) x -= top;
    return {minus, std::move(plus)};
}

} // namespace wkam

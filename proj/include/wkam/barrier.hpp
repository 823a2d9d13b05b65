#pragma once

#include "wkam/kernel.hpp"

#include <sstream>

namespace wkam {

enum class BarrierKind { finite_horizon, peierls, mane };

inline const char* barrier_kind_name(BarrierKind k) {
    switch (k) {
    case BarrierKind::finite_horizon: return "h_t";
    case BarrierKind::peierls: return "peierls";
    case BarrierKind::mane: return "mane";
    }
    return "?";
}

/// All-pairs table of h_t, the Peierls barrier h, or the Mane potential m.
template <int D>
    requires TorusDim<D>
struct BarrierTable {
    BarrierKind kind = BarrierKind::peierls;
    GridSpec<D> grid;
    CohomologyClass<D> c;
    double alpha = 0.0;
    MinPlusMatrix table;

    double operator()(std::size_t x, std::size_t y) const { return table(x, y); }
    std::size_t nodes() const { return table.rows(); }
};

template <int D>
struct Barriers {
    BarrierTable<D> peierls;
    BarrierTable<D> mane;
    MinPlusMatrix peierls_last; // last power of the window, for comparison with the window minimum
    std::size_t m_star = 0;
    double last_change = 0.0;
};

/// Closure window of at least n powers: optimal discrete orbits that rotate
/// by whole nodes per step repeat with a period dividing n.
template <int D>
std::size_t barrier_window(const GridSpec<D>& grid, std::size_t requested) {
    return std::max<std::size_t>(requested, static_cast<std::size_t>(grid.n));
}

/**
 * Peierls barrier and Mane potential of a kernel normalized by its
 * alpha_shift. The closure window is widened to barrier_window. Throws
 * DivergenceError when the shift is below the critical value and
 * NumericalError when the window limit does not settle.
 */
template <int D>
Barriers<D> compute_barriers(const CostKernel<D>& kernel, ClosureOptions opt = {}) {
    opt.window = barrier_window<D>(kernel.grid, opt.window);
    auto r = mp_closure(kernel.normalized_matrix(), opt);
    if (r.diverged) {
        std::ostringstream msg;
        msg << "subcritical normalization: alpha_shift " << kernel.alpha_shift
            << " is below the critical value (min-plus powers diverge)";
        throw DivergenceError(msg.str());
    }
    if (!r.converged) {
        std::ostringstream msg;
        msg << "barrier closure did not converge within " << opt.max_powers << " powers (last window change "
            << r.last_change << ")";
        throw NumericalError(msg.str());
    }
    Barriers<D> b;
    b.peierls = {BarrierKind::peierls, kernel.grid, kernel.c, kernel.alpha_shift, std::move(r.barrier)};
    b.mane = {BarrierKind::mane, kernel.grid, kernel.c, kernel.alpha_shift, std::move(r.potential)};
    b.peierls_last = std::move(r.barrier_last);
    b.m_star = r.m_star;
    b.last_change = r.last_change;
    return b;
}

} // namespace wkam

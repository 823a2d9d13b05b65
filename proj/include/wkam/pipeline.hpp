#pragma once

#include "wkam/barrier.hpp"
#include "wkam/mather.hpp"
#include "wkam/sets.hpp"

#include <cstdint>

namespace wkam {

struct AnalysisOptions {
    WeakKamOptions solver;
    ClosureOptions closure;
    double set_tol = 0.0; // <= 0: default_set_tol from the weak KAM residual
    int seeds = 1;
    std::uint64_t seed = 0;
    int stencil = 1;
    double distinct_tol = 0.0; // <= 0: default_distinct_tol
    MatherOptions mather;
    bool with_mather = true;
    int threads = 1;
};

/// Every per-class object: alpha, barriers, and the Aubry/Mane/Mather sets.
template <int D>
    requires TorusDim<D>
struct ClassAnalysis {
    CostKernel<D> kernel; // alpha_shift = alpha(c)
    WeakKamSolution<D> minus;
    Barriers<D> barriers;
    std::vector<ConjugatePair<D>> pairs;
    AubrySet<D> aubry;
    ManeGraph<D> mane;
    MatherSet<D> mather;
    double set_tol = 0.0;

    double alpha() const { return minus.alpha; }
};

template <int D>
ClassAnalysis<D> analyze_class(const LagrangianModel<D>& model, const GridSpec<D>& grid, const CohomologyClass<D>& c,
                               const AnalysisOptions& opt = {}, const KernelFactory<D>& factory = {}) {
    ClassAnalysis<D> a;
    a.kernel = make_kernel<D>(factory, model, resolve_grid<D>(model, grid, c), c, opt.threads);
    a.pairs = mane_pairs<D>(a.kernel, opt.seeds, opt.seed, opt.solver);
    a.minus = a.pairs.front().minus;
    a.kernel.alpha_shift = a.minus.alpha;
    ClosureOptions closure = opt.closure;
    closure.threads = opt.threads;
    a.barriers = compute_barriers<D>(a.kernel, closure);
    a.set_tol = opt.set_tol > 0.0 ? opt.set_tol : default_set_tol(a.minus.residual, grid.n);
    a.aubry = extract_aubry<D>(a.barriers.peierls, a.minus, a.set_tol, -1.0, opt.stencil);
    a.mane = extract_mane<D>(a.pairs, ManeOptions{a.set_tol, opt.distinct_tol, opt.stencil});
    if (opt.with_mather) a.mather = extract_mather<D>(a.mane, model, opt.mather, opt.threads);
    return a;
}

} // namespace wkam

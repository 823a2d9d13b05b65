#pragma once

#include "wkam/mather.hpp"
#include "wkam/sets.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace wkam {

/// Phase-space box T^D x [-p_max, p_max]^D split into grid nodes times p_cells^D momentum cells.
struct Window {
    double p_max = 1.0;
    int p_cells = 0; // <= 0: one cell per c-grid step

    void validate() const {
        if (!(p_max > 0.0) || !std::isfinite(p_max)) throw ConfigError("window.p_max: must be positive");
    }
};

struct TieredOptions {
    Axis c_axis{-1.0, 1.0, 0.05};
    Window window;
    double cover_tol = 0.0;   // <= 0: max(c step, 2/n)
    double set_tol = 0.0;     // <= 0: default_set_tol per class
    double distinct_tol = 0.0; // <= 0: default_distinct_tol
    int seeds = 1;
    std::uint64_t seed = 0;
    int stencil = 1;
    std::size_t max_listed_violations = 1000;
    WeakKamOptions solver;
    int threads = 1;
};

template <int D>
struct ClassSummary {
    CohomologyClass<D> c;
    double alpha = 0.0;
    std::size_t coincidence_nodes = 0;
    bool is_full_graph = false;
    GraphReport graph;
    double min_energy = 0.0; // min H over the graph's lifted points
};

struct DisjointnessViolation {
    std::size_t class_a = 0;
    std::size_t class_b = 0;
    std::size_t node = 0;
};

struct UncoveredCell {
    std::size_t node = 0;
    std::size_t p_cell = 0; // flat index, first coordinate fastest
};

template <int D>
    requires TorusDim<D>
struct TieredReport {
    Window window;
    int p_cells = 0;
    GridSpec<D> grid;
    Axis c_axis;
    std::vector<CohomologyClass<D>> c_grid;
    double cover_tol = 0.0;
    std::vector<ClassSummary<D>> classes;
    std::vector<ManeGraph<D>> graphs;
    std::size_t total_cells = 0;
    std::size_t covered_cells = 0;
    double coverage_fraction = 0.0;
    std::vector<UncoveredCell> uncovered;
    std::size_t disjointness_violation_count = 0;
    std::vector<DisjointnessViolation> disjointness_violations; // first max_listed_violations
    double alpha_zero = 0.0;
    double min_covered_energy = kInf; // min over covered cells of H at the nearest covering graph point
    double min_covered_center_energy = kInf;

    double cell_width() const { return 2.0 * window.p_max / p_cells; }

    Vec<D> cell_center(std::size_t flat) const {
        Vec<D> p;
        for (int d = 0; d < D; ++d) {
            std::size_t k = flat % static_cast<std::size_t>(p_cells);
            flat /= static_cast<std::size_t>(p_cells);
            p[d] = -window.p_max + (static_cast<double>(k) + 0.5) * cell_width();
        }
        return p;
    }
};

namespace detail {

template <int D>
ClassSummary<D> summarize(const ManeGraph<D>& g, const LagrangianModel<D>& model) {
    ClassSummary<D> s;
    s.c = g.c;
    s.alpha = g.alpha;
    s.coincidence_nodes = g.nodes.size();
    s.is_full_graph = g.is_full_graph;
    s.graph = graph_diagnostics<D>(g, model);
    s.min_energy = kInf;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (const auto& p : g.momenta[i])
            s.min_energy = std::min(s.min_energy, model.hamiltonian(g.grid.point(g.nodes[i]), p));
    return s;
}

template <int D>
std::size_t class_index_distance(const Axis& axis, std::size_t a, std::size_t b) {
    const std::size_t m = axis.size();
    std::size_t dist = 0;
    for (int d = 0; d < D; ++d) {
        std::size_t ia = a % m, ib = b % m;
        dist = std::max(dist, ia > ib ? ia - ib : ib - ia);
        a /= m;
        b /= m;
    }
    return dist;
}

[[noreturn]] inline void rethrow_for_class(const std::string& where) {
    try {
        throw;
    } catch (const DivergenceError& e) {
        throw DivergenceError(where + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

template <int D>
std::string class_label(const CohomologyClass<D>& c) {
    std::ostringstream s;
    s << "class c = (" << c[0];
    if constexpr (D == 2) s << ", " << c[1];
    s << ")";
    return s.str();
}

} // namespace detail

/// Mane graph of one class: weak KAM solve, conjugate pairs, coincidence set.
template <int D>
ManeGraph<D> class_mane_graph(const LagrangianModel<D>& model, const GridSpec<D>& grid, const CohomologyClass<D>& c,
                              const TieredOptions& opt, const KernelFactory<D>& factory = {}) {
    auto kernel = make_kernel<D>(factory, model, resolve_grid<D>(model, grid, c), c);
    auto pairs = mane_pairs<D>(kernel, opt.seeds, opt.seed, opt.solver);
    return extract_mane<D>(pairs, ManeOptions{opt.set_tol, opt.distinct_tol, opt.stencil});
}

/**
 * Sweeps the c-grid and measures how much of the window the Mane graphs
 * reach: a cell (node, p-cell) is covered when some class has a graph
 * momentum at that node within cover_tol of the cell center (max norm).
 * Graphs of classes at least two c-steps apart that come within cover_tol of
 * each other at a node are disjointness violations.
 */
template <int D>
TieredReport<D> tiered_scan(const LagrangianModel<D>& model, const GridSpec<D>& grid, const TieredOptions& opt,
                            const KernelFactory<D>& factory = {}) {
    opt.c_axis.validate("c_grid");
    opt.window.validate();
    resolve_grid<D>(model, grid, CohomologyClass<D>{}).validate();
    TieredReport<D> r;
    r.window = opt.window;
    r.grid = grid;
    r.c_axis = opt.c_axis;
    r.c_grid = class_grid<D>(opt.c_axis);
    if (r.c_grid.empty()) throw ConfigError("tiered_scan: empty c_grid");
    r.cover_tol = opt.cover_tol > 0.0 ? opt.cover_tol : std::max(opt.c_axis.step, 2.0 / grid.n);
    r.p_cells = opt.window.p_cells > 0 ? opt.window.p_cells
                                       : std::max(1, static_cast<int>(std::lround(2.0 * opt.window.p_max /
                                                                                  opt.c_axis.step)));

    r.graphs.resize(r.c_grid.size());
    parallel_for(r.c_grid.size(), opt.threads, [&](std::size_t i) {
        try {
            r.graphs[i] = class_mane_graph<D>(model, grid, r.c_grid[i], opt, factory);
        } catch (const std::exception&) {
            detail::rethrow_for_class(detail::class_label<D>(r.c_grid[i]));
        }
    });
    for (const auto& g : r.graphs) r.classes.push_back(detail::summarize<D>(g, model));
    {
        CohomologyClass<D> zero{};
        r.alpha_zero = solve_weak_kam<D>(make_kernel<D>(factory, model, resolve_grid<D>(model, grid, zero), zero),
                                         Direction::minus, opt.solver)
                           .alpha;
    }

    // Coverage: nearest covering witness per cell.
    const std::size_t nodes = grid.nodes();
    const std::size_t pc = static_cast<std::size_t>(r.p_cells);
    std::size_t cells_per_node = 1;
    for (int d = 0; d < D; ++d) cells_per_node *= pc;
    r.total_cells = nodes * cells_per_node;
    std::vector<double> best_dist(r.total_cells, kInf);
    std::vector<double> witness_energy(r.total_cells, kInf);
    const double w = r.cell_width();
    for (const auto& g : r.graphs) {
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const std::size_t node = g.nodes[i];
            const auto q = grid.point(node);
            for (const auto& p : g.momenta[i]) {
                std::array<long, D> lo{}, hi{};
                bool empty = false;
                for (int d = 0; d < D; ++d) {
                    lo[d] = std::max(0L, static_cast<long>(std::ceil((p[d] - r.cover_tol + opt.window.p_max) / w - 0.5)));
                    hi[d] = std::min(static_cast<long>(pc) - 1,
                                     static_cast<long>(std::floor((p[d] + r.cover_tol + opt.window.p_max) / w - 0.5)));
                    if (lo[d] > hi[d]) empty = true;
                }
                if (empty) continue;
                const double energy = model.hamiltonian(q, p);
                std::array<long, D> k = lo;
                while (true) {
                    std::size_t flat = 0;
                    for (int d = D - 1; d >= 0; --d) flat = flat * pc + static_cast<std::size_t>(k[d]);
                    auto center = r.cell_center(flat);
                    double dist = max_abs<D>(sub(center, p.p));
                    std::size_t cell = node * cells_per_node + flat;
                    if (dist <= r.cover_tol && dist < best_dist[cell]) {
                        best_dist[cell] = dist;
                        witness_energy[cell] = energy;
                    }
                    int d = 0;
                    for (; d < D; ++d) {
                        if (++k[d] <= hi[d]) break;
                        k[d] = lo[d];
                    }
                    if (d == D) break;
                }
            }
        }
    }
    for (std::size_t cell = 0; cell < r.total_cells; ++cell) {
        const std::size_t node = cell / cells_per_node;
        const std::size_t flat = cell % cells_per_node;
        if (best_dist[cell] == kInf) {
            r.uncovered.push_back({node, flat});
            continue;
        }
        ++r.covered_cells;
        r.min_covered_energy = std::min(r.min_covered_energy, witness_energy[cell]);
        r.min_covered_center_energy =
            std::min(r.min_covered_center_energy, model.hamiltonian(grid.point(node), Momentum<D>{r.cell_center(flat)}));
    }
    r.coverage_fraction = static_cast<double>(r.covered_cells) / static_cast<double>(r.total_cells);

    // Disjointness: per node, sweep graph momenta sorted by the first coordinate.
    struct Entry {
        double p0;
        std::size_t cls;
        Vec<D> p;
    };
    std::vector<std::vector<Entry>> at_node(nodes);
    for (std::size_t ci = 0; ci < r.graphs.size(); ++ci) {
        const auto& g = r.graphs[ci];
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
            for (const auto& p : g.momenta[i]) at_node[g.nodes[i]].push_back({p[0], ci, p.p});
    }
    for (std::size_t node = 0; node < nodes; ++node) {
        auto& list = at_node[node];
        std::stable_sort(list.begin(), list.end(), [](const Entry& a, const Entry& b) { return a.p0 < b.p0; });
        std::vector<std::pair<std::size_t, std::size_t>> found;
        for (std::size_t a = 0; a < list.size(); ++a)
            for (std::size_t b = a + 1; b < list.size() && list[b].p0 - list[a].p0 <= r.cover_tol; ++b) {
                if (list[a].cls == list[b].cls) continue;
                if (detail::class_index_distance<D>(opt.c_axis, list[a].cls, list[b].cls) < 2) continue;
                if (max_abs<D>(sub(list[a].p, list[b].p)) > r.cover_tol) continue;
                found.emplace_back(std::min(list[a].cls, list[b].cls), std::max(list[a].cls, list[b].cls));
            }
        std::sort(found.begin(), found.end());
        found.erase(std::unique(found.begin(), found.end()), found.end());
        r.disjointness_violation_count += found.size();
        for (const auto& [a, b] : found)
            if (r.disjointness_violations.size() < opt.max_listed_violations)
                r.disjointness_violations.push_back({a, b, node});
    }
    return r;
}

struct PartitionVerdict {
    bool covers = false;
    bool disjoint = false;
    bool all_graphs = false;
    std::string interpretation;
};

/**
 * covers: coverage_fraction >= 1 - cover_slack; disjoint: no violations
 * between classes two or more steps apart; all_graphs: every class has a
 * full, single-valued graph.
 */
template <int D>
PartitionVerdict partition_check(const TieredReport<D>& r, double cover_slack = 0.0) {
    PartitionVerdict v;
    v.covers = r.coverage_fraction >= 1.0 - cover_slack;
    v.disjoint = r.disjointness_violation_count == 0;
    v.all_graphs = std::all_of(r.classes.begin(), r.classes.end(),
                               [](const auto& s) { return s.is_full_graph && s.graph.violations == 0; });
    if (v.covers && v.disjoint && v.all_graphs)
        v.interpretation = "integrable-like: the sampled classes' Mane graphs are full, pairwise disjoint and cover "
                           "the window; this is evidence for a partition into invariant Lipschitz Lagrangian graphs, "
                           "not a proof, since only finitely many classes were sampled";
    else if (!v.covers)
        v.interpretation = "not integrable: part of the window is reached by no Mane graph, so phase space is not "
                           "partitioned into invariant Lipschitz Lagrangian graphs (conclusive up to the window and "
                           "grid resolution)";
    else
        v.interpretation = "inconclusive: the window is covered but the graphs overlap or are not full graphs at "
                           "this resolution";
    return v;
}

/// Linear (D = 1) or bilinear (D = 2) interpolation of a full graph's momentum field.
template <int D>
Vec<D> graph_momentum_at(const ManeGraph<D>& g, const TorusPoint<D>& q) {
    const int n = g.grid.n;
    IVec<D> base{};
    Vec<D> frac{};
    for (int d = 0; d < D; ++d) {
        double s = wrap_unit(q[d]) * n;
        double f = std::floor(s);
        base[d] = static_cast<int>(f);
        frac[d] = s - f;
    }
    Vec<D> out{};
    for (int corner = 0; corner < (1 << D); ++corner) {
        IVec<D> m = base;
        double weight = 1.0;
        for (int d = 0; d < D; ++d) {
            bool up = (corner >> d) & 1;
            m[d] += up;
            weight *= up ? frac[d] : 1.0 - frac[d];
        }
        const auto& p = g.momentum(g.grid.flat_index(m));
        for (int d = 0; d < D; ++d) out[d] += weight * p[d];
    }
    return out;
}

/**
 * Flows each graph point (q, p(q)) for the horizon and returns the largest
 * momentum distance from the end point to the interpolated graph at the
 * end point's configuration.
 */
template <int D>
double invariance_check(const LagrangianModel<D>& model, const ManeGraph<D>& g, double horizon, double dt,
                        int threads = 1) {
    if (!g.is_full_graph) throw ConfigError("invariance_check: needs a full graph");
    std::vector<double> drift(g.nodes.size(), 0.0);
    parallel_for(g.nodes.size(), threads, [&](std::size_t i) {
        PhaseState<D> s{0.0, g.grid.point(g.nodes[i]).coords, g.momentum(i).p};
        auto end = flow_endpoint<D>(model, s, horizon, dt);
        drift[i] = max_abs<D>(sub(end.p, graph_momentum_at<D>(g, end.point())));
    });
    return drift.empty() ? 0.0 : *std::max_element(drift.begin(), drift.end());
}

} // namespace wkam

// weakkam: command-line front end for the wkam library.
//
// Every subcommand reads a JSON config (--config), writes JSON summaries and
// CSV tables into --out, and logs to stderr. Exit codes: 0 ok, 1 config
// error, 2 numerical failure.

#include "wkam/checks.hpp"
#include "wkam/config.hpp"
#include "wkam/io.hpp"
#include "wkam/tiered.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace wkam;

namespace {

struct Context {
    RunConfig cfg;
    fs::path out;
    int threads = 1;
    bool cache = true;
    std::uint64_t seed = 0;
};

template <int D>
ojson vec_json(const Vec<D>& v) {
    ojson a = ojson::array();
    for (int i = 0; i < D; ++i) a.push_back(v[i]);
    return a;
}

template <int D>
ojson grid_json(const GridSpec<D>& g) {
    return ojson{{"n", g.n},
                 {"tau", g.tau},
                 {"v_max", g.v_max},
                 {"quadrature", g.quadrature == Quadrature::left ? "left" : "midpoint"}};
}

ojson axis_json(const Axis& a) { return ojson{{"min", a.lo}, {"max", a.hi}, {"step", a.step}, {"samples", a.size()}}; }

ojson checks_json(const std::vector<CheckResult>& rs) {
    ojson a = ojson::array();
    for (const auto& r : rs) a.push_back(ojson{{"name", r.name}, {"pass", r.pass}, {"worst", r.worst}, {"tol", r.tol}});
    return a;
}

template <int D>
std::vector<std::string> coord_names(const char* prefix) {
    std::vector<std::string> v;
    for (int i = 0; i < D; ++i) v.push_back(std::string(prefix) + (D == 1 ? "" : std::to_string(i)));
    return v;
}

template <int D>
void cells(CsvWriter& w, const Vec<D>& v) {
    for (int i = 0; i < D; ++i) w.cell(v[i]);
}

template <int D>
std::string class_text(const Vec<D>& c) {
    std::string s = "(" + format_double(c[0]);
    if constexpr (D == 2) s += ", " + format_double(c[1]);
    return s + ")";
}

/// Kernel source for the run: the on-disk cache unless --no-cache.
template <int D>
struct Kernels {
    explicit Kernels(const Context& ctx) {
        if (ctx.cache) cache = std::make_unique<KernelCache<D>>(KernelCache<D>::default_dir(), ctx.threads);
    }
    KernelFactory<D> factory() { return cache ? cache->factory() : KernelFactory<D>{}; }
    std::unique_ptr<KernelCache<D>> cache;
};

template <int D>
AnalysisOptions analysis_options(const Context& ctx) {
    const auto& c = ctx.cfg;
    AnalysisOptions o;
    o.solver = c.solver;
    o.closure = c.closure;
    o.set_tol = c.sets.set_tol;
    o.seeds = c.sets.seeds;
    o.seed = ctx.seed;
    o.stencil = c.sets.stencil;
    o.distinct_tol = c.sets.distinct_tol;
    o.mather = MatherOptions{c.sets.horizon, c.sets.dt, c.sets.recur_tol};
    o.threads = ctx.threads;
    return o;
}

template <int D>
int cmd_alpha(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto model = make_model<D>(cfg.model);
    auto c = cfg.cls<D>();
    auto grid = resolve_grid<D>(model, cfg.grid<D>(), c);
    Kernels<D> kernels(ctx);
    auto kernel = make_kernel<D>(kernels.factory(), model, grid, c, ctx.threads);
    auto sol = solve_weak_kam<D>(kernel, Direction::minus, cfg.solver);
    CsvWriter w(ctx.out / "u_minus.csv");
    auto head = coord_names<D>("q");
    head.push_back("u");
    w.header(head);
    for (std::size_t x = 0; x < sol.u.size(); ++x) {
        cells<D>(w, grid.point(x).coords);
        w.cell(sol.u[x]).end_row();
    }
    write_json(ctx.out / "alpha.json", ojson{{"command", "alpha"},
                                             {"c", vec_json<D>(c.c)},
                                             {"alpha", sol.alpha},
                                             {"residual", sol.residual},
                                             {"iterations", sol.iterations},
                                             {"grid", grid_json<D>(grid)}});
    std::cerr << "alpha: c = " << class_text<D>(c.c) << ", alpha = " << sol.alpha << " (residual " << sol.residual
              << ", " << sol.iterations << " iterations)\n";
    return 0;
}

template <int D>
int cmd_barrier(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto model = make_model<D>(cfg.model);
    auto c = cfg.cls<D>();
    auto grid = resolve_grid<D>(model, cfg.grid<D>(), c);
    Kernels<D> kernels(ctx);
    auto kernel = make_kernel<D>(kernels.factory(), model, grid, c, ctx.threads);
    double alpha = cfg.alpha ? *cfg.alpha : solve_weak_kam<D>(kernel, Direction::minus, cfg.solver).alpha;
    kernel.alpha_shift = alpha;
    ClosureOptions closure = cfg.closure;
    closure.threads = ctx.threads;
    auto b = compute_barriers<D>(kernel, closure);
    write_table_csv(ctx.out / "mane.csv", b.mane.table);
    write_table_csv(ctx.out / "peierls.csv", b.peierls.table);
    std::size_t argmin = 0;
    for (std::size_t x = 1; x < b.peierls.nodes(); ++x)
        if (b.peierls(x, x) < b.peierls(argmin, argmin)) argmin = x;
    write_json(ctx.out / "barrier.json",
               ojson{{"command", "barrier"},
                     {"c", vec_json<D>(c.c)},
                     {"alpha", alpha},
                     {"alpha_source", cfg.alpha ? "config" : "solver"},
                     {"grid", grid_json<D>(grid)},
                     {"window", barrier_window<D>(grid, cfg.closure.window)},
                     {"converged", true},
                     {"m_star", b.m_star},
                     {"last_change", b.last_change},
                     {"window_min_vs_last", max_abs_difference(b.peierls.table, b.peierls_last)},
                     {"diagonal_min", b.peierls(argmin, argmin)},
                     {"diagonal_argmin", vec_json<D>(grid.point(argmin).coords)}});
    std::cerr << "barrier: c = " << class_text<D>(c.c) << ", alpha = " << alpha << ", settled after " << b.m_star
              << " powers\n";
    return 0;
}

template <int D>
int cmd_sets(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto model = make_model<D>(cfg.model);
    auto c = cfg.cls<D>();
    Kernels<D> kernels(ctx);
    auto a = analyze_class<D>(model, cfg.grid<D>(), c, analysis_options<D>(ctx), kernels.factory());
    const auto& grid = a.kernel.grid;
    CsvWriter w(ctx.out / "sets.csv");
    auto head = coord_names<D>("c");
    for (auto& s : coord_names<D>("q")) head.push_back(s);
    for (auto& s : coord_names<D>("p")) head.push_back(s);
    head.push_back("tag");
    w.header(head);
    auto row = [&](std::size_t node, const Momentum<D>& p, const char* tag) {
        cells<D>(w, c.c);
        cells<D>(w, grid.point(node).coords);
        cells<D>(w, p.p);
        w.cell(std::string(tag)).end_row();
    };
    for (std::size_t i = 0; i < a.mather.nodes.size(); ++i) row(a.mather.nodes[i], a.mather.momenta[i], "mather");
    for (std::size_t i = 0; i < a.aubry.nodes.size(); ++i) row(a.aubry.nodes[i], a.aubry.momenta[i], "aubry");
    for (std::size_t i = 0; i < a.mane.nodes.size(); ++i)
        for (const auto& p : a.mane.momenta[i]) row(a.mane.nodes[i], p, "mane");
    auto diag = graph_diagnostics<D>(a.mane, model);
    ojson rotations = ojson::array();
    for (std::size_t i = 0; i < a.mather.nodes.size(); ++i)
        rotations.push_back(ojson{{"q", vec_json<D>(a.mather.points[i].coords)}, {"rho", vec_json<D>(a.mather.rotation[i])}});
    write_json(ctx.out / "sets.json", ojson{{"command", "sets"},
                                            {"c", vec_json<D>(c.c)},
                                            {"alpha", a.alpha()},
                                            {"residual", a.minus.residual},
                                            {"set_tol", a.set_tol},
                                            {"seeds", cfg.sets.seeds},
                                            {"grid", grid_json<D>(grid)},
                                            {"aubry_nodes", a.aubry.nodes.size()},
                                            {"mane_nodes", a.mane.nodes.size()},
                                            {"mather_nodes", a.mather.nodes.size()},
                                            {"is_full_graph", a.mane.is_full_graph},
                                            {"lipschitz_seminorm", diag.lipschitz_seminorm},
                                            {"shell_defect", diag.shell_defect},
                                            {"violations", diag.violations},
                                            {"mather_rotation", rotations}});
    std::cerr << "sets: c = " << class_text<D>(c.c) << ": " << a.mather.nodes.size() << " Mather, "
              << a.aubry.nodes.size() << " Aubry, " << a.mane.nodes.size() << " Mane nodes\n";
    return 0;
}

template <int D>
AlphaBetaTable<D> beta_table(const Context& ctx, const LagrangianModel<D>& model, KernelFactory<D> factory) {
    const auto& cfg = ctx.cfg;
    Axis c_axis = cfg.beta_c_axis();
    c_axis.validate("c_grid");
    auto alpha = sample_alpha<D>(model, cfg.grid<D>(), class_grid<D>(c_axis), cfg.solver, ctx.threads, factory);
    return compute_beta<D>(c_axis, std::move(alpha), cfg.beta_h_axis(), cfg.fenchel_tol);
}

template <int D>
int cmd_beta(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto model = make_model<D>(cfg.model);
    Kernels<D> kernels(ctx);
    auto t = beta_table<D>(ctx, model, kernels.factory());
    const double corner_tol = cfg.corner_tol > 0.0 ? cfg.corner_tol : 3.0 * t.c_axis.step;
    auto corners = beta_differentiability_scan<D>(t, corner_tol);
    {
        CsvWriter w(ctx.out / "alpha.csv");
        auto head = coord_names<D>("c");
        head.push_back("alpha");
        w.header(head);
        for (std::size_t i = 0; i < t.c_grid.size(); ++i) {
            cells<D>(w, t.c_grid[i].c);
            w.cell(t.alpha_values[i]).end_row();
        }
    }
    {
        CsvWriter w(ctx.out / "beta.csv");
        auto head = coord_names<D>("h");
        head.push_back("beta");
        for (auto& s : coord_names<D>("dual_c_lo")) head.push_back(s);
        for (auto& s : coord_names<D>("dual_c_hi")) head.push_back(s);
        w.header(head);
        for (std::size_t j = 0; j < t.h_grid.size(); ++j) {
            auto box = subderivative_interval<D>(t, j);
            cells<D>(w, t.h_grid[j]);
            w.cell(t.beta_values[j]);
            for (int d = 0; d < D; ++d) w.cell(box[d].lo);
            for (int d = 0; d < D; ++d) w.cell(box[d].hi);
            w.end_row();
        }
    }
    ojson clist = ojson::array();
    for (std::size_t j : corners) {
        auto box = subderivative_interval<D>(t, j);
        ojson lo = ojson::array(), hi = ojson::array();
        for (int d = 0; d < D; ++d) {
            lo.push_back(box[d].lo);
            hi.push_back(box[d].hi);
        }
        clist.push_back(ojson{{"h", vec_json<D>(t.h_grid[j])}, {"dual_c_lo", lo}, {"dual_c_hi", hi}});
    }
    write_json(ctx.out / "beta.json", ojson{{"command", "beta"},
                                            {"c_grid", axis_json(t.c_axis)},
                                            {"h_grid", axis_json(t.h_axis)},
                                            {"fenchel_tol", t.tol},
                                            {"corner_tol", corner_tol},
                                            {"corners", clist}});
    std::cerr << "beta: " << t.c_grid.size() << " classes, " << t.h_grid.size() << " homology samples, "
              << corners.size() << " corners\n";
    return 0;
}

template <int D>
int cmd_tiered(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto model = make_model<D>(cfg.model);
    TieredOptions o;
    o.c_axis = cfg.tiered_c_axis();
    o.window = cfg.window;
    o.cover_tol = cfg.cover_tol;
    o.set_tol = cfg.sets.set_tol;
    o.distinct_tol = cfg.sets.distinct_tol;
    o.seeds = cfg.sets.seeds;
    o.seed = ctx.seed;
    o.stencil = cfg.sets.stencil;
    o.solver = cfg.solver;
    o.threads = ctx.threads;
    Kernels<D> kernels(ctx);
    auto r = tiered_scan<D>(model, cfg.grid<D>(), o, kernels.factory());
    auto v = partition_check<D>(r, cfg.cover_slack);
    {
        CsvWriter w(ctx.out / "uncovered.csv");
        auto head = coord_names<D>("q");
        for (auto& s : coord_names<D>("p")) head.push_back(s);
        w.header(head);
        for (const auto& u : r.uncovered) {
            cells<D>(w, r.grid.point(u.node).coords);
            cells<D>(w, r.cell_center(u.p_cell));
            w.end_row();
        }
    }
    {
        CsvWriter w(ctx.out / "plot_data.csv");
        auto head = coord_names<D>("q");
        for (auto& s : coord_names<D>("p")) head.push_back(s);
        head.push_back("class");
        for (auto& s : coord_names<D>("c")) head.push_back(s);
        w.header(head);
        for (std::size_t ci = 0; ci < r.graphs.size(); ++ci) {
            const auto& g = r.graphs[ci];
            for (std::size_t i = 0; i < g.nodes.size(); ++i)
                for (const auto& p : g.momenta[i]) {
                    cells<D>(w, r.grid.point(g.nodes[i]).coords);
                    cells<D>(w, p.p);
                    w.cell(ci);
                    cells<D>(w, g.c.c);
                    w.end_row();
                }
        }
    }
    ojson classes = ojson::array();
    for (const auto& s : r.classes)
        classes.push_back(ojson{{"c", vec_json<D>(s.c.c)},
                                {"alpha", s.alpha},
                                {"coincidence_nodes", s.coincidence_nodes},
                                {"is_full_graph", s.is_full_graph},
                                {"lipschitz_seminorm", s.graph.lipschitz_seminorm},
                                {"shell_defect", s.graph.shell_defect},
                                {"violations", s.graph.violations},
                                {"min_energy", s.min_energy}});
    ojson viol = ojson::array();
    for (const auto& d : r.disjointness_violations)
        viol.push_back(ojson{{"c_a", vec_json<D>(r.c_grid[d.class_a].c)},
                             {"c_b", vec_json<D>(r.c_grid[d.class_b].c)},
                             {"q", vec_json<D>(r.grid.point(d.node).coords)}});
    write_json(ctx.out / "tiered.json",
               ojson{{"command", "tiered"},
                     {"window", ojson{{"p_max", r.window.p_max}, {"p_cells", r.p_cells}}},
                     {"grid", grid_json<D>(r.grid)},
                     {"c_grid", axis_json(r.c_axis)},
                     {"cover_tol", r.cover_tol},
                     {"total_cells", r.total_cells},
                     {"covered_cells", r.covered_cells},
                     {"coverage_fraction", r.coverage_fraction},
                     {"uncovered_fraction", 1.0 - r.coverage_fraction},
                     {"alpha_zero", r.alpha_zero},
                     {"min_covered_energy", r.min_covered_energy},
                     {"min_covered_center_energy", r.min_covered_center_energy},
                     {"disjointness_violation_count", r.disjointness_violation_count},
                     {"disjointness_violations", viol},
                     {"verdict",
                      ojson{{"covers", v.covers},
                            {"disjoint", v.disjoint},
                            {"all_graphs", v.all_graphs},
                            {"interpretation", v.interpretation},
                            {"scope", "finite c-grid: failure to cover is conclusive at this resolution, success "
                                      "is evidence only"}}},
                     {"classes", classes}});
    std::cerr << "tiered: coverage " << r.coverage_fraction << " of " << r.total_cells << " cells; " << v.interpretation
              << "\n";
    return 0;
}

template <int D>
int cmd_check(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    auto model = make_model<D>(cfg.model);
    Kernels<D> kernels(ctx);
    bool all = true;
    std::vector<std::string> failed;
    ojson classes = ojson::array();
    for (const auto& cv : cfg.check.classes) {
        CohomologyClass<D> c;
        for (int i = 0; i < D; ++i) c.c[i] = cv[i];
        auto a = analyze_class<D>(model, cfg.grid<D>(), c, analysis_options<D>(ctx), kernels.factory());
        auto rs = barrier_checks<D>(a, model, cfg.check.tol, ctx.threads);
        for (auto& r : set_checks<D>(a, model, cfg.check.shell_tol)) rs.push_back(r);
        for (const auto& r : rs)
            if (!r.pass) {
                all = false;
                failed.push_back(r.name + " at c = " + class_text<D>(c.c));
            }
        classes.push_back(ojson{{"c", vec_json<D>(c.c)}, {"alpha", a.alpha()}, {"checks", checks_json(rs)}});
    }
    ojson out{{"command", "check"}, {"tol", cfg.check.tol}, {"shell_tol", cfg.check.shell_tol}, {"classes", classes}};
    if (cfg.check.fenchel) {
        auto t = beta_table<D>(ctx, model, kernels.factory());
        auto rs = fenchel_checks<D>(t, cfg.fenchel_tol);
        for (const auto& r : rs)
            if (!r.pass) {
                all = false;
                failed.push_back(r.name);
            }
        out["fenchel"] = checks_json(rs);
    }
    out["all_pass"] = all;
    write_json(ctx.out / "check.json", out);
    if (!all) {
        std::cerr << "check: FAILED:";
        for (const auto& f : failed) std::cerr << "\n  " << f;
        std::cerr << "\n";
        return 2;
    }
    std::cerr << "check: all invariants pass\n";
    return 0;
}

template <int D>
int cmd_flow(const Context& ctx) {
    const auto& f = ctx.cfg.flow;
    auto model = make_model<D>(ctx.cfg.model);
    TorusPoint<D> q0;
    Momentum<D> p0;
    for (int i = 0; i < D; ++i) {
        q0.coords[i] = f.q0[i];
        p0.p[i] = f.p0[i];
    }
    auto traj = el_flow<D>(model, q0, p0, f.t, f.dt);
    const double h0 = model.hamiltonian(q0, p0);
    double drift = 0.0;
    CsvWriter w(ctx.out / "flow.csv");
    std::vector<std::string> head{"t"};
    for (auto& s : coord_names<D>("q")) head.push_back(s);
    for (auto& s : coord_names<D>("p")) head.push_back(s);
    head.push_back("H");
    w.header(head);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj[i];
        double h = model.hamiltonian(s.point(), Momentum<D>{s.p});
        drift = std::max(drift, std::abs(h - h0));
        if (i % static_cast<std::size_t>(f.stride) != 0 && i + 1 != traj.size()) continue;
        w.cell(s.t);
        cells<D>(w, s.q);
        cells<D>(w, s.p);
        w.cell(h).end_row();
    }
    const auto& end = traj.back();
    write_json(ctx.out / "flow.json", ojson{{"command", "flow"},
                                            {"q0", vec_json<D>(q0.coords)},
                                            {"p0", vec_json<D>(p0.p)},
                                            {"t", f.t},
                                            {"dt", f.dt},
                                            {"q_end", vec_json<D>(end.q)},
                                            {"p_end", vec_json<D>(end.p)},
                                            {"energy_start", h0},
                                            {"max_energy_drift", drift}});
    std::cerr << "flow: " << traj.size() << " states, max energy drift " << drift << "\n";
    return 0;
}

template <int D>
int dispatch(const std::string& cmd, const Context& ctx) {
    if (cmd == "alpha") return cmd_alpha<D>(ctx);
    if (cmd == "barrier") return cmd_barrier<D>(ctx);
    if (cmd == "sets") return cmd_sets<D>(ctx);
    if (cmd == "beta") return cmd_beta<D>(ctx);
    if (cmd == "tiered") return cmd_tiered<D>(ctx);
    if (cmd == "check") return cmd_check<D>(ctx);
    if (cmd == "flow") return cmd_flow<D>(ctx);
    throw ConfigError("unknown command '" + cmd + "'");
}

void prepare_output(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("--out: cannot create '" + out.string() + "': " + ec.message());
    const auto probe = out / ".weakkam-write-test";
    {
        std::ofstream f(probe);
        if (!f) throw ConfigError("--out: directory '" + out.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak KAM, Aubry-Mather and tiered Mane set computations on flat tori"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    bool no_cache = false;
    std::uint64_t seed = 0;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"alpha", "critical value alpha(c) and the weak KAM solution u-"},
        {"barrier", "Mane potential and Peierls barrier tables"},
        {"sets", "Aubry, Mane and Mather sets of one class"},
        {"beta", "alpha on a c-grid, its conjugate beta, and corners of beta"},
        {"tiered", "coverage of a phase-space window by Mane graphs over a c-grid"},
        {"check", "invariant suite with pass/fail per invariant"},
        {"flow", "Hamiltonian flow from one initial condition"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
        sub->add_flag("--no-cache", no_cache, "do not read or write the kernel cache");
        sub->add_option("--seed", seed, "seed for the random initial functions of extra Mane seeds")
            ->capture_default_str();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        Context ctx;
        ctx.cfg = load_config(config_path);
        ctx.out = out_dir;
        ctx.threads = threads;
        ctx.cache = !no_cache;
        ctx.seed = seed;
        prepare_output(ctx.out);
        return ctx.cfg.model.dimension == 1 ? dispatch<1>(cmd, ctx) : dispatch<2>(cmd, ctx);
    } catch (const ConfigError& e) {
        std::cerr << "weakkam " << cmd << ": config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "weakkam " << cmd << ": numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "weakkam " << cmd << ": file error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "weakkam " << cmd << ": error: " << e.what() << "\n";
        return 2;
    }
}

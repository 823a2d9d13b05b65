#pragma once

#include "wkam/mather.hpp"
#include "wkam/pipeline.hpp"
#include "wkam/tiered.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace wkam {

using json = nlohmann::json;

namespace detail {

inline std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
}

inline void expect_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    expect_object(j, path);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(join_path(path, key) + ": unknown key");
    }
}

inline bool present(const json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

inline double get_number(const json& j, const std::string& path, const char* key, double fallback) {
    if (!present(j, key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(join_path(path, key) + ": expected a number");
    return v.get<double>();
}

inline double get_positive(const json& j, const std::string& path, const char* key, double fallback) {
    double v = get_number(j, path, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(join_path(path, key) + ": must be positive");
    return v;
}

inline long long get_integer(const json& j, const std::string& path, const char* key, long long fallback) {
    if (!present(j, key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(join_path(path, key) + ": expected an integer");
    return v.get<long long>();
}

inline std::string get_string(const json& j, const std::string& path, const char* key, const std::string& fallback) {
    if (!present(j, key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(join_path(path, key) + ": expected a string");
    return v.get<std::string>();
}

inline bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
    if (!present(j, key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(join_path(path, key) + ": expected true or false");
    return v.get<bool>();
}

// A number (D = 1 only) or an array of `dim` numbers.
inline std::vector<double> get_vector(const json& v, const std::string& path, int dim) {
    if (v.is_number() && dim == 1) return {v.get<double>()};
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw ConfigError(path + ": expected an array of " + std::to_string(dim) + " numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(path + ": expected an array of " + std::to_string(dim) + " numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::optional<Axis> get_axis(const json& j, const std::string& path, const char* key) {
    if (!present(j, key)) return std::nullopt;
    const std::string p = join_path(path, key);
    const auto& v = j.at(key);
    expect_keys(v, p, {"min", "max", "step"});
    for (const char* k : {"min", "max", "step"})
        if (!present(v, k)) throw ConfigError(join_path(p, k) + ": required");
    Axis a{get_number(v, p, "min", 0.0), get_number(v, p, "max", 0.0), get_number(v, p, "step", 0.0)};
    a.validate(p.c_str());
    return a;
}

} // namespace detail

/// Model description as ingested from JSON, before the dimension is fixed.
struct ModelSpec {
    Catalog catalog = Catalog::free;
    int dimension = 1;
    struct Term {
        std::vector<int> k;
        double a = 0.0;
    };
    std::vector<Term> potential;
    std::optional<std::vector<std::vector<double>>> kinetic;
};

inline ModelSpec parse_model(const json& j, const std::string& path = "model") {
    using namespace detail;
    expect_keys(j, path, {"catalog", "dimension", "potential", "kinetic"});
    ModelSpec m;
    if (!present(j, "catalog")) throw ConfigError(join_path(path, "catalog") + ": required");
    try {
        m.catalog = catalog_from_name(get_string(j, path, "catalog", ""));
    } catch (const ConfigError& e) {
        throw ConfigError(join_path(path, e.what()));
    }
    m.dimension = static_cast<int>(get_integer(j, path, "dimension", 1));
    if (m.dimension != 1 && m.dimension != 2) throw ConfigError(join_path(path, "dimension") + ": must be 1 or 2");
    if (present(j, "potential")) {
        const auto& pot = j.at("potential");
        const std::string pp = join_path(path, "potential");
        if (!pot.is_array()) throw ConfigError(pp + ": expected an array of {k, a} terms");
        for (std::size_t i = 0; i < pot.size(); ++i) {
            const std::string tp = pp + "[" + std::to_string(i) + "]";
            expect_keys(pot[i], tp, {"k", "a"});
            if (!present(pot[i], "k") || !present(pot[i], "a")) throw ConfigError(tp + ": needs both k and a");
            ModelSpec::Term t;
            const auto& k = pot[i].at("k");
            if (!k.is_array() || static_cast<int>(k.size()) != m.dimension)
                throw ConfigError(tp + ".k: expected " + std::to_string(m.dimension) + " integers");
            for (const auto& x : k) {
                if (!x.is_number_integer()) throw ConfigError(tp + ".k: expected integers");
                t.k.push_back(x.get<int>());
            }
            t.a = get_number(pot[i], tp, "a", 0.0);
            m.potential.push_back(std::move(t));
        }
    }
    if (present(j, "kinetic")) {
        const auto& kin = j.at("kinetic");
        const std::string kp = join_path(path, "kinetic");
        if (!kin.is_array() || static_cast<int>(kin.size()) != m.dimension)
            throw ConfigError(kp + ": expected a " + std::to_string(m.dimension) + "x" + std::to_string(m.dimension) +
                              " matrix");
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < kin.size(); ++i)
            rows.push_back(get_vector(kin[i], kp + "[" + std::to_string(i) + "]", m.dimension));
        m.kinetic = rows;
    }
    if (m.kinetic && m.catalog != Catalog::anisotropic_kinetic)
        throw ConfigError(join_path(path, "kinetic") + ": only the anisotropic-kinetic entry takes a kinetic matrix");
    if (!m.kinetic && m.catalog == Catalog::anisotropic_kinetic)
        throw ConfigError(join_path(path, "kinetic") + ": required for anisotropic-kinetic");
    return m;
}

template <int D>
LagrangianModel<D> make_model(const ModelSpec& s) {
    if (s.dimension != D) throw ConfigError("model.dimension: mismatch");
    std::vector<Harmonic<D>> terms;
    for (const auto& t : s.potential) {
        Harmonic<D> h;
        for (int i = 0; i < D; ++i) h.k[i] = t.k[i];
        h.a = t.a;
        terms.push_back(h);
    }
    try {
        switch (s.catalog) {
        case Catalog::free:
            if (!terms.empty()) throw ConfigError("potential: the free catalog entry takes no potential");
            return LagrangianModel<D>::free();
        case Catalog::mechanical: return LagrangianModel<D>::mechanical(terms);
        case Catalog::two_harmonic:
            if (terms.size() != 2) throw ConfigError("potential: two-harmonic needs exactly two terms");
            return LagrangianModel<D>::two_harmonic(terms[0], terms[1]);
        case Catalog::anisotropic_kinetic: {
            Mat<D> a{};
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) a[i][j] = (*s.kinetic)[i][j];
            return LagrangianModel<D>::anisotropic(a, terms);
        }
        }
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("model.") + e.what());
    }
    throw ConfigError("model.catalog: unsupported");
}

inline json model_to_json(const ModelSpec& s) {
    json j = json::object();
    j["catalog"] = std::string(catalog_name(s.catalog));
    j["dimension"] = s.dimension;
    json pot = json::array();
    for (const auto& t : s.potential) pot.push_back(json{{"k", t.k}, {"a", t.a}});
    j["potential"] = pot;
    j["kinetic"] = s.kinetic ? json(*s.kinetic) : json(nullptr);
    return j;
}

struct SetsConfig {
    double set_tol = 0.0; // <= 0: default
    int seeds = 1;
    int stencil = 1;
    double distinct_tol = 0.0; // <= 0: default
    double horizon = 0.0; // <= 0: 200 tau
    double dt = 1e-3;
    double recur_tol = 0.0; // <= 0: 2/n
};

struct CheckConfig {
    std::vector<std::vector<double>> classes; // empty: the single class c
    double tol = 1e-2;
    double shell_tol = 0.1;
    bool fenchel = true;
};

struct FlowConfig {
    std::vector<double> q0;
    std::vector<double> p0;
    double t = 10.0;
    double dt = 1e-3;
    int stride = 1;
};

/// Whole run configuration; sections not used by a subcommand are still validated.
struct RunConfig {
    ModelSpec model;
    int n = 64;
    double tau = 0.05;
    double v_max = 0.0; // <= 0: per-class default
    Quadrature quadrature = Quadrature::left;
    std::vector<double> c;
    std::optional<double> alpha; // barrier normalization override
    WeakKamOptions solver;
    ClosureOptions closure;
    SetsConfig sets;
    std::optional<Axis> c_grid;
    std::optional<Axis> h_grid;
    double fenchel_tol = 1e-3;
    double corner_tol = 0.0; // <= 0: 3 c-grid steps
    Window window;
    double cover_tol = 0.0;
    double cover_slack = 0.0;
    CheckConfig check;
    FlowConfig flow;

    template <int D>
    GridSpec<D> grid() const {
        return GridSpec<D>{n, tau, v_max, quadrature};
    }

    template <int D>
    CohomologyClass<D> cls() const {
        CohomologyClass<D> k;
        for (int i = 0; i < D; ++i) k.c[i] = c[i];
        return k;
    }

    /// c-grid for alpha/beta sampling: explicit, else 81 samples over [-2, 2].
    Axis beta_c_axis() const { return c_grid ? *c_grid : Axis::symmetric(2.0, 81); }
    Axis beta_h_axis() const { return h_grid ? *h_grid : Axis{-1.0, 1.0, 0.1}; }

    /// c-grid for the tiered scan: explicit, else step 0.05 over [-(p_max + 1), p_max + 1].
    Axis tiered_c_axis() const {
        if (c_grid) return *c_grid;
        double c_max = window.p_max + 1.0;
        return Axis{-c_max, c_max, 0.05};
    }
};

inline RunConfig parse_config(const json& j) {
    using namespace detail;
    expect_keys(j, "", {"model", "grid", "c", "alpha", "solver", "closure", "sets", "c_grid", "h_grid", "beta",
                        "window", "tiered", "check", "flow"});
    RunConfig r;
    if (!present(j, "model")) throw ConfigError("model: required");
    r.model = parse_model(j.at("model"));
    const int dim = r.model.dimension;

    if (present(j, "grid")) {
        const auto& g = j.at("grid");
        expect_keys(g, "grid", {"n", "tau", "v_max", "quadrature"});
        r.n = static_cast<int>(get_integer(g, "grid", "n", r.n));
        if (r.n < 8) throw ConfigError("grid.n: must be >= 8");
        if (dim == 2 && r.n > 64) throw ConfigError("grid.n: at most 64 per dimension on T^2");
        if (dim == 1 && r.n > 4096) throw ConfigError("grid.n: at most 4096 on T^1");
        r.tau = get_positive(g, "grid", "tau", r.tau);
        if (present(g, "v_max")) r.v_max = get_positive(g, "grid", "v_max", 1.0);
        std::string q = get_string(g, "grid", "quadrature", "left");
        if (q == "left")
            r.quadrature = Quadrature::left;
        else if (q == "midpoint")
            r.quadrature = Quadrature::midpoint;
        else
            throw ConfigError("grid.quadrature: expected \"left\" or \"midpoint\"");
    }
    r.c = present(j, "c") ? get_vector(j.at("c"), "c", dim) : std::vector<double>(dim, 0.0);
    if (present(j, "alpha")) r.alpha = get_number(j, "", "alpha", 0.0);

    if (present(j, "solver")) {
        const auto& s = j.at("solver");
        expect_keys(s, "solver", {"tol", "max_iters", "relaxation", "check_saturation"});
        r.solver.tol = get_positive(s, "solver", "tol", r.solver.tol);
        auto iters = get_integer(s, "solver", "max_iters", static_cast<long long>(r.solver.max_iters));
        if (iters < 1) throw ConfigError("solver.max_iters: must be >= 1");
        r.solver.max_iters = static_cast<std::size_t>(iters);
        r.solver.relaxation = get_positive(s, "solver", "relaxation", r.solver.relaxation);
        if (r.solver.relaxation > 1.0) throw ConfigError("solver.relaxation: must lie in (0, 1]");
        r.solver.check_saturation = get_bool(s, "solver", "check_saturation", r.solver.check_saturation);
    }
    if (present(j, "closure")) {
        const auto& s = j.at("closure");
        expect_keys(s, "closure", {"window", "tol", "max_powers"});
        auto w = get_integer(s, "closure", "window", static_cast<long long>(r.closure.window));
        auto mp = get_integer(s, "closure", "max_powers", static_cast<long long>(r.closure.max_powers));
        if (w < 1) throw ConfigError("closure.window: must be >= 1");
        if (mp < 1) throw ConfigError("closure.max_powers: must be >= 1");
        r.closure.window = static_cast<std::size_t>(w);
        r.closure.max_powers = static_cast<std::size_t>(mp);
        r.closure.tol = get_positive(s, "closure", "tol", r.closure.tol);
    }
    if (present(j, "sets")) {
        const auto& s = j.at("sets");
        expect_keys(s, "sets", {"set_tol", "seeds", "stencil", "distinct_tol", "horizon", "dt", "recur_tol"});
        if (present(s, "set_tol")) r.sets.set_tol = get_positive(s, "sets", "set_tol", 1.0);
        r.sets.seeds = static_cast<int>(get_integer(s, "sets", "seeds", r.sets.seeds));
        if (r.sets.seeds < 1) throw ConfigError("sets.seeds: must be >= 1");
        r.sets.stencil = static_cast<int>(get_integer(s, "sets", "stencil", r.sets.stencil));
        if (r.sets.stencil < 1 || r.sets.stencil > r.n / 4) throw ConfigError("sets.stencil: must lie in [1, n/4]");
        if (present(s, "distinct_tol")) r.sets.distinct_tol = get_positive(s, "sets", "distinct_tol", 1.0);
        if (present(s, "horizon")) r.sets.horizon = get_positive(s, "sets", "horizon", 1.0);
        r.sets.dt = get_positive(s, "sets", "dt", r.sets.dt);
        if (present(s, "recur_tol")) r.sets.recur_tol = get_positive(s, "sets", "recur_tol", 1.0);
    }
    r.c_grid = get_axis(j, "", "c_grid");
    r.h_grid = get_axis(j, "", "h_grid");
    if (present(j, "beta")) {
        const auto& s = j.at("beta");
        expect_keys(s, "beta", {"fenchel_tol", "corner_tol"});
        r.fenchel_tol = get_positive(s, "beta", "fenchel_tol", r.fenchel_tol);
        if (present(s, "corner_tol")) r.corner_tol = get_positive(s, "beta", "corner_tol", 1.0);
    }
    if (present(j, "window")) {
        const auto& s = j.at("window");
        expect_keys(s, "window", {"p_max", "p_cells"});
        r.window.p_max = get_positive(s, "window", "p_max", r.window.p_max);
        r.window.p_cells = static_cast<int>(get_integer(s, "window", "p_cells", 0));
        if (present(s, "p_cells") && r.window.p_cells < 1) throw ConfigError("window.p_cells: must be >= 1");
    }
    if (present(j, "tiered")) {
        const auto& s = j.at("tiered");
        expect_keys(s, "tiered", {"cover_tol", "cover_slack"});
        if (present(s, "cover_tol")) r.cover_tol = get_positive(s, "tiered", "cover_tol", 1.0);
        r.cover_slack = get_number(s, "tiered", "cover_slack", 0.0);
        if (r.cover_slack < 0.0 || r.cover_slack >= 1.0) throw ConfigError("tiered.cover_slack: must lie in [0, 1)");
    }
    if (present(j, "check")) {
        const auto& s = j.at("check");
        expect_keys(s, "check", {"classes", "tol", "shell_tol", "fenchel"});
        if (present(s, "classes")) {
            const auto& cl = s.at("classes");
            if (!cl.is_array() || cl.empty()) throw ConfigError("check.classes: expected a non-empty array of classes");
            for (std::size_t i = 0; i < cl.size(); ++i)
                r.check.classes.push_back(get_vector(cl[i], "check.classes[" + std::to_string(i) + "]", dim));
        }
        r.check.tol = get_positive(s, "check", "tol", r.check.tol);
        r.check.shell_tol = get_positive(s, "check", "shell_tol", r.check.shell_tol);
        r.check.fenchel = get_bool(s, "check", "fenchel", r.check.fenchel);
    }
    if (r.check.classes.empty()) r.check.classes.push_back(r.c);
    r.flow.q0.assign(dim, 0.0);
    r.flow.p0.assign(dim, 0.0);
    if (present(j, "flow")) {
        const auto& s = j.at("flow");
        expect_keys(s, "flow", {"q0", "p0", "t", "dt", "stride"});
        if (present(s, "q0")) r.flow.q0 = get_vector(s.at("q0"), "flow.q0", dim);
        if (present(s, "p0")) r.flow.p0 = get_vector(s.at("p0"), "flow.p0", dim);
        r.flow.t = get_positive(s, "flow", "t", r.flow.t);
        r.flow.dt = get_positive(s, "flow", "dt", r.flow.dt);
        if (r.flow.dt > r.flow.t) throw ConfigError("flow.dt: must not exceed flow.t");
        r.flow.stride = static_cast<int>(get_integer(s, "flow", "stride", r.flow.stride));
        if (r.flow.stride < 1) throw ConfigError("flow.stride: must be >= 1");
    }
    if (dim == 1) make_model<1>(r.model);
    else make_model<2>(r.model);
    return r;
}

/// Reads and parses a config file; JSON syntax errors become ConfigError with the parser's position.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: malformed JSON in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

} // namespace wkam

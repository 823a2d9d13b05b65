#pragma once

#include "wkam/error.hpp"
#include "wkam/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace wkam {

template <int D>
using Mat = std::array<Vec<D>, D>;

template <int D>
Vec<D> mat_vec(const Mat<D>& a, const Vec<D>& x) {
    Vec<D> y{};
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) y[i] += a[i][j] * x[j];
    return y;
}

template <int D>
Mat<D> identity_mat() {
    Mat<D> m{};
    for (int i = 0; i < D; ++i) m[i][i] = 1.0;
    return m;
}

/// Eigenvalues of a symmetric DxD matrix, ascending.
template <int D>
Vec<D> sym_eigenvalues(const Mat<D>& a) {
    if constexpr (D == 1) {
        return {a[0][0]};
    } else {
        double tr = a[0][0] + a[1][1];
        double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        return {0.5 * tr - disc, 0.5 * tr + disc};
    }
}

template <int D>
Mat<D> sym_inverse(const Mat<D>& a) {
    if constexpr (D == 1) {
        return {Vec<1>{1.0 / a[0][0]}};
    } else {
        double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        return {Vec<2>{a[1][1] / det, -a[0][1] / det}, Vec<2>{-a[1][0] / det, a[0][0] / det}};
    }
}

enum class Catalog { free, mechanical, two_harmonic, anisotropic_kinetic };

inline std::string_view catalog_name(Catalog c) {
    switch (c) {
    case Catalog::free: return "free";
    case Catalog::mechanical: return "mechanical";
    case Catalog::two_harmonic: return "two-harmonic";
    case Catalog::anisotropic_kinetic: return "anisotropic-kinetic";
    }
    return "?";
}

inline Catalog catalog_from_name(std::string_view s) {
    if (s == "free") return Catalog::free;
    if (s == "mechanical") return Catalog::mechanical;
    if (s == "two-harmonic") return Catalog::two_harmonic;
    if (s == "anisotropic-kinetic") return Catalog::anisotropic_kinetic;
    throw ConfigError("catalog: unknown entry '" + std::string(s) + "'");
}

/// One Fourier mode a*cos(2*pi*k.q) of the potential.
template <int D>
struct Harmonic {
    IVec<D> k{};
    double a = 0.0;
};

/**
 * Tonelli Lagrangian from the catalog
 *
 *   L(q, v) = 1/2 v^T A v - U(q),   U(q) = sum_k a_k cos(2 pi k.q),
 *
 * with A symmetric positive definite (A = I except for the anisotropic entry).
 * Every entry has closed-form Legendre map, inverse and Hamiltonian
 * H(q, p) = 1/2 p^T A^{-1} p + U(q).
 */
template <int D>
    requires TorusDim<D>
class LagrangianModel {
public:
    static LagrangianModel free() { return LagrangianModel(Catalog::free, identity_mat<D>(), {}); }

    static LagrangianModel mechanical(std::vector<Harmonic<D>> potential) {
        return LagrangianModel(Catalog::mechanical, identity_mat<D>(), std::move(potential));
    }

    /// U(q) = a1 cos(2 pi k1.q) + a2 cos(2 pi k2.q).
    static LagrangianModel two_harmonic(Harmonic<D> first, Harmonic<D> second) {
        return LagrangianModel(Catalog::two_harmonic, identity_mat<D>(), {first, second});
    }

    static LagrangianModel anisotropic(Mat<D> kinetic, std::vector<Harmonic<D>> potential = {}) {
        return LagrangianModel(Catalog::anisotropic_kinetic, kinetic, std::move(potential));
    }

    /// The pendulum U(q) = a cos(2 pi q_1).
    static LagrangianModel pendulum(double a = 1.0) {
        Harmonic<D> h;
        h.k[0] = 1;
        h.a = a;
        return mechanical({h});
    }

    Catalog catalog() const { return catalog_; }
    const Mat<D>& kinetic() const { return kinetic_; }
    const std::vector<Harmonic<D>>& potential_terms() const { return potential_; }

    double potential(const TorusPoint<D>& q) const {
        double u = 0.0;
        for (const auto& h : potential_) u += h.a * std::cos(phase(h, q));
        return u;
    }

    Vec<D> potential_gradient(const TorusPoint<D>& q) const {
        Vec<D> g{};
        for (const auto& h : potential_) {
            double s = -h.a * 2.0 * std::numbers::pi * std::sin(phase(h, q));
            for (int i = 0; i < D; ++i) g[i] += s * h.k[i];
        }
        return g;
    }

    /// sum |a_k|, an upper bound for max |U|.
    double potential_amplitude() const {
        double s = 0.0;
        for (const auto& h : potential_) s += std::abs(h.a);
        return s;
    }

    double lagrangian(const TorusPoint<D>& q, const Velocity<D>& v) const {
        return 0.5 * dot<D>(v.v, mat_vec<D>(kinetic_, v.v)) - potential(q);
    }

    /// Fiber Hessian d2L/dv2; constant for the catalog.
    const Mat<D>& fiber_hessian(const TorusPoint<D>&, const Velocity<D>&) const { return kinetic_; }

    double lambda_min() const { return sym_eigenvalues<D>(kinetic_)[0]; }
    double lambda_max() const { return sym_eigenvalues<D>(kinetic_)[D - 1]; }

    Momentum<D> legendre(const TorusPoint<D>&, const Velocity<D>& v) const {
        return {mat_vec<D>(kinetic_, v.v)};
    }

    Velocity<D> legendre_inverse(const TorusPoint<D>&, const Momentum<D>& p) const {
        return {mat_vec<D>(kinetic_inv_, p.p)};
    }

    double hamiltonian(const TorusPoint<D>& q, const Momentum<D>& p) const {
        return 0.5 * dot<D>(p.p, mat_vec<D>(kinetic_inv_, p.p)) + potential(q);
    }

    /// dH/dp, the velocity field of the Hamiltonian flow.
    Vec<D> hamiltonian_velocity(const Momentum<D>& p) const { return mat_vec<D>(kinetic_inv_, p.p); }

private:
    LagrangianModel(Catalog cat, Mat<D> kinetic, std::vector<Harmonic<D>> potential)
        : catalog_(cat), kinetic_(kinetic), potential_(std::move(potential)) {
        validate();
        kinetic_inv_ = sym_inverse<D>(kinetic_);
    }

    static double phase(const Harmonic<D>& h, const TorusPoint<D>& q) {
        double s = 0.0;
        for (int i = 0; i < D; ++i) s += h.k[i] * q.coords[i];
        return 2.0 * std::numbers::pi * s;
    }

    void validate() const {
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) {
                if (!std::isfinite(kinetic_[i][j])) throw ConfigError("kinetic: non-finite entry");
                if (kinetic_[i][j] != kinetic_[j][i]) throw ConfigError("kinetic: matrix is not symmetric");
            }
        if (!(sym_eigenvalues<D>(kinetic_)[0] > 0.0))
            throw ConfigError("kinetic: matrix is not positive definite");
        for (const auto& h : potential_)
            if (!std::isfinite(h.a)) throw ConfigError("potential: non-finite amplitude");
        if (catalog_ == Catalog::free && !potential_.empty())
            throw ConfigError("potential: the free catalog entry takes no potential");
        if (catalog_ == Catalog::two_harmonic && potential_.size() != 2)
            throw ConfigError("potential: two-harmonic needs exactly two terms");
    }

    Catalog catalog_;
    Mat<D> kinetic_;
    Mat<D> kinetic_inv_{};
    std::vector<Harmonic<D>> potential_;
};

/// A point of the Hamiltonian flow with the configuration kept lifted to R^D.
template <int D>
struct PhaseState {
    double t = 0.0;
    Vec<D> q{};
    Vec<D> p{};

    TorusPoint<D> point() const { return TorusPoint<D>{q}.canonical(); }
};

template <int D>
using Trajectory = std::vector<PhaseState<D>>;

namespace detail {
// McLachlan's 6-stage symmetric Runge-Kutta-Nystrom scheme (order 4).
inline constexpr std::array<double, 6> rkn_a = [] {
    std::array<double, 6> a{0.40518861839525227722, -0.28714404081652408900, 0.0, 0.0, 0.0, 0.0};
    a[2] = 0.5 - (a[0] + a[1]);
    a[3] = a[2];
    a[4] = a[1];
    a[5] = a[0];
    return a;
}();
inline constexpr std::array<double, 6> rkn_b = [] {
    std::array<double, 6> b{-3.0 / 73.0, 17.0 / 59.0, 0.0, 0.0, 0.0, 0.0};
    b[2] = 1.0 - 2.0 * (b[0] + b[1]);
    b[3] = b[1];
    b[4] = b[0];
    return b;
}();

template <int D>
void rkn_step(const LagrangianModel<D>& model, PhaseState<D>& s, double h) {
    for (std::size_t l = 0; l < rkn_a.size(); ++l) {
        Vec<D> qdot = model.hamiltonian_velocity(Momentum<D>{s.p});
        for (int i = 0; i < D; ++i) s.q[i] += rkn_a[l] * h * qdot[i];
        if (rkn_b[l] != 0.0) {
            Vec<D> g = model.potential_gradient(TorusPoint<D>{s.q});
            for (int i = 0; i < D; ++i) s.p[i] -= rkn_b[l] * h * g[i];
        }
    }
    s.t += h;
}
} // namespace detail

/**
 * Hamiltonian flow of the model from (q0, p0) over [0, t] with step dt,
 * using a fourth-order symplectic splitting. The returned trajectory starts
 * with the initial state; positions are lifted (not wrapped). A final partial
 * step lands exactly on t when dt does not divide t.
 */
template <int D>
Trajectory<D> el_flow(const LagrangianModel<D>& model, const TorusPoint<D>& q0, const Momentum<D>& p0, double t,
                      double dt) {
    if (!(t > 0.0)) throw ConfigError("el_flow: duration must be positive");
    if (!(dt > 0.0) || dt > t) throw ConfigError("el_flow: step must satisfy 0 < dt <= t");
    auto full = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
    Trajectory<D> traj;
    traj.reserve(full + 2);
    PhaseState<D> s{0.0, q0.coords, p0.p};
    traj.push_back(s);
    for (std::size_t i = 0; i < full; ++i) {
        detail::rkn_step<D>(model, s, dt);
        s.t = static_cast<double>(i + 1) * dt;
        traj.push_back(s);
    }
    double rest = t - s.t;
    if (rest > 1e-12 * t) {
        detail::rkn_step<D>(model, s, rest);
        s.t = t;
        traj.push_back(s);
    }
    return traj;
}

/// Endpoint of the flow without materializing the trajectory.
template <int D>
PhaseState<D> flow_endpoint(const LagrangianModel<D>& model, const PhaseState<D>& start, double t, double dt) {
    if (!(t > 0.0)) throw ConfigError("el_flow: duration must be positive");
    if (!(dt > 0.0) || dt > t) throw ConfigError("el_flow: step must satisfy 0 < dt <= t");
    PhaseState<D> s = start;
    auto full = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
    for (std::size_t i = 0; i < full; ++i) detail::rkn_step<D>(model, s, dt);
    double rest = start.t + t - s.t;
    if (rest > 1e-12 * t) detail::rkn_step<D>(model, s, rest);
    s.t = start.t + t;
    return s;
}

} // namespace wkam

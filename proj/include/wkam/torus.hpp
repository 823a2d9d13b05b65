#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace wkam {

/// Dimension of the configuration torus T^D. Only flat tori with D in {1, 2}.
template <int D>
concept TorusDim = (D == 1 || D == 2);

template <int D>
using Vec = std::array<double, D>;

template <int D>
using IVec = std::array<int, D>;

template <int D>
constexpr double dot(const Vec<D>& a, const Vec<D>& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += a[i] * b[i];
    return s;
}

template <int D>
double norm(const Vec<D>& a) {
    return std::sqrt(dot<D>(a, a));
}

template <std::size_t N>
constexpr std::array<double, N> sub(const std::array<double, N>& a, const std::array<double, N>& b) {
    std::array<double, N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
    return r;
}

template <int D>
double max_abs(const Vec<D>& a) {
    double m = 0.0;
    for (int i = 0; i < D; ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

/// Representative of x modulo 1 in [0, 1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

/// Signed representative of x modulo 1 in [-1/2, 1/2).
inline double wrap_signed(double x) {
    return x - std::floor(x + 0.5);
}

/// Point of T^D. Coordinates are interpreted modulo 1; `canonical()` maps into [0,1)^D.
template <int D>
struct TorusPoint {
    Vec<D> coords{};

    TorusPoint canonical() const {
        TorusPoint r;
        for (int i = 0; i < D; ++i) r.coords[i] = wrap_unit(coords[i]);
        return r;
    }

    double operator[](int i) const { return coords[i]; }

    friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

/// Shortest displacement from a to b among all integer translates.
template <int D>
Vec<D> torus_displacement(const TorusPoint<D>& a, const TorusPoint<D>& b) {
    Vec<D> d;
    for (int i = 0; i < D; ++i) d[i] = wrap_signed(b.coords[i] - a.coords[i]);
    return d;
}

/// Flat torus metric: Euclidean length of the shortest lifted displacement.
template <int D>
double torus_distance(const TorusPoint<D>& a, const TorusPoint<D>& b) {
    return norm<D>(torus_displacement<D>(a, b));
}

/// Tangent vector (houses v).
template <int D>
struct Velocity {
    Vec<D> v{};
    double operator[](int i) const { return v[i]; }
    friend bool operator==(const Velocity&, const Velocity&) = default;
};

/// Cotangent vector (houses p).
template <int D>
struct Momentum {
    Vec<D> p{};
    double operator[](int i) const { return p[i]; }
    friend bool operator==(const Momentum&, const Momentum&) = default;
};

/// Cohomology class of the constant closed 1-form c.dq on T^D.
template <int D>
struct CohomologyClass {
    Vec<D> c{};
    double operator[](int i) const { return c[i]; }
    friend bool operator==(const CohomologyClass&, const CohomologyClass&) = default;
};

} // namespace wkam

#pragma once

#include "wkam/error.hpp"
#include "wkam/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace wkam {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense matrix over the (min, +) semiring; +inf is the semiring zero.
class MinPlusMatrix {
public:
    MinPlusMatrix() = default;
    MinPlusMatrix(std::size_t rows, std::size_t cols, double fill = kInf)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static MinPlusMatrix identity(std::size_t n) {
        MinPlusMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
        return m;
    }

    static MinPlusMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        MinPlusMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t i = 0; i < m.rows_; ++i) {
            if (rows[i].size() != m.cols_) throw ConfigError("MinPlusMatrix: ragged rows");
            std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    /// Entrywise minimum with `other` (the semiring sum).
    MinPlusMatrix& min_with(const MinPlusMatrix& other) {
        check_same_shape(other, "min_with");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] = std::min(data_[k], other.data_[k]);
        return *this;
    }

    /// Adds `s` to every finite entry.
    MinPlusMatrix& shift(double s) {
        for (double& x : data_)
            if (x != kInf) x += s;
        return *this;
    }

    friend bool operator==(const MinPlusMatrix&, const MinPlusMatrix&) = default;

    void check_same_shape(const MinPlusMatrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw ConfigError(std::string(op) + ": shape mismatch");
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// max |a - b| over entries, with inf - inf counted as 0 and finite/inf mismatch as inf.
inline double max_abs_difference(const MinPlusMatrix& a, const MinPlusMatrix& b) {
    a.check_same_shape(b, "max_abs_difference");
    double d = 0.0;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] == y[k]) continue;
        d = std::max(d, std::abs(x[k] - y[k]));
    }
    return d;
}

/// C[i][j] = min_k A[i][k] + B[k][j]. Rows are computed independently.
inline MinPlusMatrix mp_product(const MinPlusMatrix& a, const MinPlusMatrix& b, int threads = 1) {
    if (a.cols() != b.rows()) throw ConfigError("mp_product: shape mismatch");
    MinPlusMatrix c(a.rows(), b.cols());
    parallel_for(a.rows(), threads, [&](std::size_t i) {
        auto out = c.row(i);
        auto arow = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = arow[k];
            if (aik == kInf) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::min(out[j], aik + brow[j]);
        }
    });
    return c;
}

/// Product that also records, per entry, the smallest minimizing middle index
/// (-1 where the entry is +inf).
struct ArgminProduct {
    MinPlusMatrix value;
    std::vector<std::int32_t> argmin;
};

inline ArgminProduct mp_product_argmin(const MinPlusMatrix& a, const MinPlusMatrix& b, int threads = 1) {
    if (a.cols() != b.rows()) throw ConfigError("mp_product: shape mismatch");
    ArgminProduct r{MinPlusMatrix(a.rows(), b.cols()), std::vector<std::int32_t>(a.rows() * b.cols(), -1)};
    parallel_for(a.rows(), threads, [&](std::size_t i) {
        auto out = r.value.row(i);
        std::int32_t* arg = r.argmin.data() + i * b.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == kInf) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < out.size(); ++j) {
                double v = aik + brow[j];
                if (v < out[j]) {
                    out[j] = v;
                    arg[j] = static_cast<std::int32_t>(k);
                }
            }
        }
    });
    return r;
}

/// A^{(x)m} by repeated squaring, m >= 1.
inline MinPlusMatrix mp_power(const MinPlusMatrix& a, std::uint64_t m, int threads = 1) {
    if (!a.square()) throw ConfigError("mp_power: matrix must be square");
    if (m == 0) throw ConfigError("mp_power: exponent must be >= 1");
    MinPlusMatrix result;
    bool have = false;
    MinPlusMatrix base = a;
    while (true) {
        if (m & 1u) {
            result = have ? mp_product(result, base, threads) : base;
            have = true;
        }
        m >>= 1u;
        if (m == 0) break;
        base = mp_product(base, base, threads);
    }
    return result;
}

/// Row-vector product (u (x) A)[j] = min_i u[i] + A[i][j].
inline std::vector<double> mp_vec_mat(std::span<const double> u, const MinPlusMatrix& a) {
    if (u.size() != a.rows()) throw ConfigError("mp_vec_mat: shape mismatch");
    std::vector<double> out(a.cols(), kInf);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (u[i] == kInf) continue;
        auto arow = a.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::min(out[j], u[i] + arow[j]);
    }
    return out;
}

/**
 * Kleene plus-closure A (+) A^2 (+) A^3 (+) ... by Floyd-Warshall. When some
 * cycle has negative weight the result is meaningless except for the flag:
 * `negative_cycle` is set as soon as a diagonal entry drops below -tol.
 */
struct KleeneResult {
    MinPlusMatrix closure;
    bool negative_cycle = false;
};

inline KleeneResult mp_kleene_plus(const MinPlusMatrix& a, double tol = 0.0) {
    if (!a.square()) throw ConfigError("mp_kleene_plus: matrix must be square");
    KleeneResult r{a, false};
    auto& m = r.closure;
    const std::size_t n = m.rows();
    for (std::size_t k = 0; k < n; ++k) {
        auto krow = m.row(k);
        std::vector<double> kr(krow.begin(), krow.end());
        for (std::size_t i = 0; i < n; ++i) {
            double mik = m(i, k);
            if (mik == kInf) continue;
            auto irow = m.row(i);
            for (std::size_t j = 0; j < n; ++j) irow[j] = std::min(irow[j], mik + kr[j]);
        }
        if (m(k, k) < -tol) {
            r.negative_cycle = true;
            return r;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (m(i, i) < -tol) r.negative_cycle = true;
    return r;
}

/// True when the min-plus powers of A are unbounded below.
inline bool mp_diverges(const MinPlusMatrix& a, double tol = 0.0) {
    return mp_kleene_plus(a, tol).negative_cycle;
}

struct ClosureOptions {
    std::size_t window = 32;       // W: width of the trailing window of powers
    double tol = 1e-6;             // successive window values must move less than this
    std::size_t max_powers = 4096; // give up after this many powers
    int threads = 1;
};

/**
 * Limits of the min-plus powers A, A^2, A^3, ... of a normalized kernel.
 *
 * `potential` is the running minimum over the identity (the zero-length
 * path, so potential(x, x) <= 0) and all powers up to `m_star`; `barrier`
 * is the minimum over the last window of W powers, `barrier_last` the last
 * power itself. Powers are grouped into consecutive blocks of W; the closure
 * has converged once two successive block minima differ by less than tol.
 * With a negative cycle nothing is iterated and `diverged` is set.
 */
struct ClosureResult {
    MinPlusMatrix potential;
    MinPlusMatrix barrier;
    MinPlusMatrix barrier_last;
    bool converged = false;
    bool diverged = false;
    std::size_t m_star = 0;
    double last_change = kInf;
};

inline ClosureResult mp_closure(const MinPlusMatrix& a, const ClosureOptions& opt = {}) {
    if (!a.square()) throw ConfigError("mp_closure: matrix must be square");
    if (opt.window == 0) throw ConfigError("mp_closure: window must be >= 1");
    ClosureResult r;
    if (mp_diverges(a, opt.tol)) {
        r.diverged = true;
        return r;
    }
    const std::size_t n = a.rows();
    MinPlusMatrix power = a;
    r.potential = a;
    r.potential.min_with(MinPlusMatrix::identity(n));
    MinPlusMatrix block(n, n);
    MinPlusMatrix previous;
    bool have_previous = false;
    for (std::size_t k = 1; k <= opt.max_powers; ++k) {
        if (k > 1) {
            power = mp_product(power, a, opt.threads);
            r.potential.min_with(power);
        }
        block.min_with(power);
        if (k % opt.window != 0) continue;
        if (have_previous) {
            r.last_change = max_abs_difference(block, previous);
            if (r.last_change < opt.tol) {
                r.converged = true;
                r.m_star = k;
                r.barrier = std::move(block);
                r.barrier_last = std::move(power);
                return r;
            }
        }
        previous = block;
        have_previous = true;
        block = MinPlusMatrix(n, n);
    }
    r.m_star = opt.max_powers;
    r.barrier = have_previous ? previous : block;
    r.barrier_last = std::move(power);
    return r;
}

} // namespace wkam

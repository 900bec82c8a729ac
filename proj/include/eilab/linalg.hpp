#pragma once

// Dense linear algebra at working precision: the symmetric factorization used
// for every posterior solve, Gram determinants for the Vandermonde oracle, and
// a pivot-ratio conditioning diagnostic.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eilab/error.hpp"
#include "eilab/real.hpp"

namespace eilab {

template <class T>
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols, const T& fill)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<T> data_;
};

using RealMatrix = Matrix<Real>;
using ComplexMatrix = Matrix<Complex>;

inline RealMatrix identity(std::size_t n, const PrecisionContext& ctx) {
    RealMatrix m(n, n, ctx.zero());
    for (std::size_t i = 0; i < n; ++i) m(i, i) = ctx.from(1);
    return m;
}

struct SpdOptions {
    /// Opt-in diagonal shift of 10^(-digits/2); callers must record its use.
    bool jitter = false;
};

struct SpdSystem {
    RealMatrix matrix;
    std::vector<Real> rhs;
};

/// A = L D L^t with unit lower-triangular L.
class LdlFactor {
public:
    LdlFactor(RealMatrix lower, std::vector<Real> pivots)
        : lower_(std::move(lower)), pivots_(std::move(pivots)) {}

    [[nodiscard]] std::size_t size() const { return pivots_.size(); }
    [[nodiscard]] const RealMatrix& lower() const { return lower_; }
    [[nodiscard]] std::span<const Real> pivots() const { return pivots_; }

    /// y = L^{-1} b
    [[nodiscard]] std::vector<Real> forward(std::span<const Real> b) const {
        const std::size_t n = size();
        if (b.size() != n) fail(ErrorKind::DimensionMismatch, "rhs length does not match factor");
        std::vector<Real> y(b.begin(), b.end());
        for (std::size_t i = 1; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (!y[j].is_zero()) y[i] -= lower_(i, j) * y[j];
            }
        }
        return y;
    }

    /// x = A^{-1} b
    [[nodiscard]] std::vector<Real> solve(std::span<const Real> b) const {
        std::vector<Real> y = forward(b);
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) y[i] /= pivots_[i];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) y[i] -= lower_(j, i) * y[j];
        }
        return y;
    }

private:
    RealMatrix lower_;
    std::vector<Real> pivots_;
};

/// Pivots at or below 10^(-(digits - guard)) times the largest diagonal entry
/// are treated as numerically non-positive: fewer than `guard` digits of such a
/// pivot survive rounding.
inline LdlFactor ldl_factor(const RealMatrix& a, const PrecisionContext& ctx, const SpdOptions& options = {}) {
    const std::size_t n = a.rows();
    if (a.cols() != n) fail(ErrorKind::DimensionMismatch, "matrix is not square");
    if (n == 0) return LdlFactor(RealMatrix(0, 0, ctx.zero()), {});

    Real max_diag = abs(a(0, 0));
    for (std::size_t i = 1; i < n; ++i) max_diag = max(max_diag, abs(a(i, i)));
    const Real sym_tol = ctx.working_tolerance() * max_diag;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (abs(a(i, j) - a(j, i)) > sym_tol) {
                fail(ErrorKind::InvalidArgument, "matrix is not symmetric at (" + std::to_string(i) + ", " +
                                                     std::to_string(j) + ")");
            }
        }
    }
    const Real threshold = ctx.working_tolerance() * max_diag;
    const Real shift = options.jitter ? ctx.tolerance(ctx.digits() / 2) : ctx.zero();

    RealMatrix lower = identity(n, ctx);
    std::vector<Real> d;
    d.reserve(n);
    Real t(ctx.bits());
    for (std::size_t j = 0; j < n; ++j) {
        Real pivot = a(j, j) + shift;
        for (std::size_t k = 0; k < j; ++k) pivot -= sqr(lower(j, k)) * d[k];
        if (!(pivot > threshold)) {
            fail(ErrorKind::NonPositivePivot, "pivot " + std::to_string(j + 1) + " of " + std::to_string(n) +
                                                  " is " + pivot.to_decimal(6) + " (threshold " +
                                                  threshold.to_decimal(3) + ")");
        }
        d.push_back(pivot);
        for (std::size_t i = j + 1; i < n; ++i) {
            t = a(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= lower(i, k) * lower(j, k) * d[k];
            lower(i, j) = t / d[j];
        }
    }
    return LdlFactor(std::move(lower), std::move(d));
}

inline std::vector<Real> solve_spd(const SpdSystem& system, const PrecisionContext& ctx,
                                   const SpdOptions& options = {}) {
    if (system.matrix.rows() != system.rhs.size()) {
        fail(ErrorKind::DimensionMismatch, "matrix has " + std::to_string(system.matrix.rows()) +
                                               " rows but rhs has " + std::to_string(system.rhs.size()));
    }
    return ldl_factor(system.matrix, ctx, options).solve(system.rhs);
}

/// Largest over smallest LDL^t pivot; a cheap conditioning proxy for reports.
inline Real condition_estimate(const LdlFactor& factor) {
    auto p = factor.pivots();
    if (p.empty()) fail(ErrorKind::DimensionMismatch, "empty matrix");
    Real lo = p[0];
    Real hi = p[0];
    for (const Real& v : p) {
        lo = min(lo, v);
        hi = max(hi, v);
    }
    return hi / lo;
}

inline Real condition_estimate(const RealMatrix& matrix, const PrecisionContext& ctx) {
    return condition_estimate(ldl_factor(matrix, ctx));
}

inline std::vector<Real> multiply(const RealMatrix& a, std::span<const Real> x, const PrecisionContext& ctx) {
    if (a.cols() != x.size()) fail(ErrorKind::DimensionMismatch, "matrix-vector size mismatch");
    std::vector<Real> out(a.rows(), ctx.zero());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
    }
    return out;
}

/// Determinant of a square complex matrix by Gaussian elimination with partial pivoting.
inline Complex determinant(ComplexMatrix m, const PrecisionContext& ctx) {
    const std::size_t n = m.rows();
    if (m.cols() != n) fail(ErrorKind::DimensionMismatch, "matrix is not square");
    Complex det(ctx.from(1), ctx.zero());
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t best = col;
        Real best_norm = m(col, col).norm();
        for (std::size_t r = col + 1; r < n; ++r) {
            Real nr = m(r, col).norm();
            if (nr > best_norm) {
                best = r;
                best_norm = std::move(nr);
            }
        }
        if (best_norm.is_zero()) return Complex(ctx.bits());
        if (best != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m(best, c), m(col, c));
            det = -det;
        }
        det = det * m(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            Complex factor = m(r, col) / m(col, col);
            for (std::size_t c = col + 1; c < n; ++c) m(r, c) = m(r, c) - factor * m(col, c);
        }
    }
    return det;
}

/// det of the Hermitian Gram matrix <v_i, v_j> = sum_n v_i[n] conj(v_j[n]).
inline Real gram_det(std::span<const std::vector<Complex>> vectors, const PrecisionContext& ctx) {
    const std::size_t k = vectors.size();
    if (k == 0) return ctx.from(1);
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != dim) fail(ErrorKind::DimensionMismatch, "Gram vectors differ in dimension");
    }
    ComplexMatrix gram(k, k, Complex(ctx.bits()));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            Complex acc(ctx.bits());
            for (std::size_t n = 0; n < dim; ++n) acc = acc + vectors[i][n] * vectors[j][n].conj();
            gram(i, j) = acc;
            if (i != j) gram(j, i) = acc.conj();
        }
    }
    return determinant(std::move(gram), ctx).re;
}

}  // namespace eilab

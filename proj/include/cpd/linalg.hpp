// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/tensor.hpp"

namespace cpd {

struct singular_system_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct singular_triangular_error : std::runtime_error {
    singular_triangular_error(std::size_t column, double value)
        : std::runtime_error("triangular solve: diagonal entry of column " +
                             std::to_string(column) + " is " + std::to_string(value) +
                             " (rank-deficient Khatri-Rao factor)"),
          column(column) {}
    std::size_t column;
};

/// Compact QR factorization A = q * r with q m-by-n orthonormal and r
/// n-by-n upper triangular, diag(r) >= 0.
struct QrPair {
    Matrix q;
    Matrix r;
};

/// Householder thin QR with a post-hoc sign flip enforcing a nonnegative
/// diagonal of r. No pivoting: the output is a deterministic function of
/// the input bits, and a first column proportional to e1 yields q(:,1) == e1
/// exactly. Rank deficiency shows up as zero diagonal entries in r.
inline QrPair thin_qr(const Matrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m < n) throw std::invalid_argument("thin_qr: requires rows >= cols");

    Matrix work = a;
    std::vector<std::vector<double>> reflectors(n);
    std::vector<double> betas(n, 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        double norm_sq = 0.0;
        for (std::size_t i = k; i < m; ++i) norm_sq += work(i, k) * work(i, k);
        const double norm = std::sqrt(norm_sq);
        if (norm == 0.0) continue;  // zero column: R(k,k) stays 0

        const double alpha = work(k, k) >= 0.0 ? -norm : norm;
        std::vector<double> v(m - k);
        v[0] = work(k, k) - alpha;
        for (std::size_t i = k + 1; i < m; ++i) v[i - k] = work(i, k);
        double vnorm_sq = 0.0;
        for (double x : v) vnorm_sq += x * x;
        const double beta = 2.0 / vnorm_sq;

        // Apply H = I - beta v v^T to the trailing block.
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i - k] * work(i, j);
            s *= beta;
            for (std::size_t i = k; i < m; ++i) work(i, j) -= s * v[i - k];
        }
        work(k, k) = alpha;
        reflectors[k] = std::move(v);
        betas[k] = beta;
    }

    Matrix r(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) r(i, j) = work(i, j);

    // Accumulate q = H_0 ... H_{n-1} applied to the first n columns of I.
    Matrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t k = n; k-- > 0;) {
        if (reflectors[k].empty()) continue;
        const auto& v = reflectors[k];
        const double beta = betas[k];
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += v[i - k] * q(i, j);
            s *= beta;
            for (std::size_t i = k; i < m; ++i) q(i, j) -= s * v[i - k];
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        if (r(k, k) < 0.0) {
            for (std::size_t j = k; j < n; ++j) r(k, j) = -r(k, j);
            for (std::size_t i = 0; i < m; ++i) q(i, k) = -q(i, k);
        }
    }
    return {std::move(q), std::move(r)};
}

namespace detail {

/// Cholesky G = L L^T, lower triangular. Empty result on a non-positive pivot.
inline std::optional<Matrix> cholesky_lower(const Matrix& g) {
    const std::size_t n = g.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = g(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) return std::nullopt;
        const double root = std::sqrt(d);
        l(j, j) = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / root;
        }
    }
    return l;
}

}  // namespace detail

struct SpdSolveResult {
    Matrix x;
    bool regularized = false;
};

/// Solve X * G = RHS for X with G symmetric positive (semi)definite.
/// A failed Cholesky is retried once with G + delta*I,
/// delta = 1e-12 * trace(G) / n, and the result is flagged as regularized.
inline SpdSolveResult solve_spd(const Matrix& g, const Matrix& rhs) {
    const std::size_t n = g.rows();
    if (g.cols() != n) throw std::invalid_argument("solve_spd: G must be square");
    if (rhs.cols() != n) throw std::invalid_argument("solve_spd: RHS columns must match G");
    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            max_abs = std::max(max_abs, std::abs(g(i, j)));
            max_asym = std::max(max_asym, std::abs(g(i, j) - g(j, i)));
        }
    if (max_asym > 1e-10 * max_abs)
        throw std::invalid_argument("solve_spd: G is not symmetric");

    auto chol = detail::cholesky_lower(g);
    bool regularized = false;
    if (!chol) {
        double trace = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += g(i, i);
        const double delta = 1e-12 * trace / static_cast<double>(n);
        Matrix shifted = g;
        for (std::size_t i = 0; i < n; ++i) shifted(i, i) += delta;
        chol = detail::cholesky_lower(shifted);
        regularized = true;
        if (!chol) {
            double min_d = g(0, 0), max_d = g(0, 0);
            for (std::size_t i = 1; i < n; ++i) {
                min_d = std::min(min_d, g(i, i));
                max_d = std::max(max_d, g(i, i));
            }
            throw singular_system_error(
                "solve_spd: factorization failed after ridge (diag range [" +
                std::to_string(min_d) + ", " + std::to_string(max_d) + "])");
        }
    }

    // X L L^T = RHS, rowwise: first W L^T = RHS, then X L = W.
    const Matrix& l = *chol;
    Matrix x = rhs;
    const std::size_t rows = rhs.rows();
    for (std::size_t r = 0; r < rows; ++r) {
        double* xr = x.data() + r * n;
        // w L^T = rhs_r  =>  forward substitution.
        for (std::size_t c = 0; c < n; ++c) {
            double s = xr[c];
            for (std::size_t j = 0; j < c; ++j) s -= xr[j] * l(c, j);
            xr[c] = s / l(c, c);
        }
        // x L = w  =>  back substitution.
        for (std::size_t c = n; c-- > 0;) {
            double s = xr[c];
            for (std::size_t j = c + 1; j < n; ++j) s -= xr[j] * l(j, c);
            xr[c] = s / l(c, c);
        }
    }
    return {std::move(x), regularized};
}

/// Solve X * L = RHS for X with L square lower triangular, processed one
/// row of X at a time. Throws singular_triangular_error when a diagonal
/// entry falls below the relative threshold.
inline Matrix solve_rows_lower_triangular(const Matrix& l, const Matrix& rhs) {
    const std::size_t n = l.rows();
    if (l.cols() != n)
        throw std::invalid_argument("solve_rows_lower_triangular: L must be square");
    if (rhs.cols() != n)
        throw std::invalid_argument("solve_rows_lower_triangular: RHS columns must match L");

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(l(i, i)));
    const double tau = 1e-14 * max_diag;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(l(i, i)) <= tau) throw singular_triangular_error(i, l(i, i));

    Matrix x = rhs;
    const std::size_t rows = rhs.rows();
    for (std::size_t r = 0; r < rows; ++r) {
        double* xr = x.data() + r * n;
        for (std::size_t c = n; c-- > 0;) {
            double s = xr[c];
            for (std::size_t j = c + 1; j < n; ++j) s -= xr[j] * l(j, c);
            xr[c] = s / l(c, c);
        }
    }
    return x;
}

struct NormalizedColumns {
    Matrix matrix;
    std::vector<double> weights;
};

/// Scale each column to unit Euclidean norm, returning the norms as weights.
/// A vanishing column is replaced by e1 with weight 0.
inline NormalizedColumns normalize_columns(const Matrix& a) {
    Matrix out = a;
    std::vector<double> weights(a.cols(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += out(i, j) * out(i, j);
        const double norm = std::sqrt(s);
        if (norm < 1e-300) {
            for (std::size_t i = 0; i < a.rows(); ++i) out(i, j) = 0.0;
            out(0, j) = 1.0;
            weights[j] = 0.0;
        } else {
            for (std::size_t i = 0; i < a.rows(); ++i) out(i, j) /= norm;
            weights[j] = norm;
        }
    }
    return {std::move(out), std::move(weights)};
}

}  // namespace cpd

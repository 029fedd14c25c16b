// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cpd/linalg.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

/// Kruskal (CP) model: nonnegative weights lambda plus one unit-column
/// factor matrix per mode.
struct KruskalModel {
    std::vector<double> lambda;
    std::vector<Matrix> factors;

    std::size_t rank() const { return lambda.size(); }
    std::size_t order() const { return factors.size(); }

    void validate() const {
        if (factors.empty()) throw std::invalid_argument("KruskalModel: no factors");
        for (const auto& f : factors)
            if (f.cols() != rank())
                throw std::invalid_argument("KruskalModel: factor rank mismatch");
        for (double w : lambda)
            if (!(w >= 0.0)) throw std::invalid_argument("KruskalModel: negative weight");
    }
};

namespace detail {

inline void check_model_shape(const KruskalModel& m, const Shape& shape) {
    if (m.order() != shape.order())
        throw std::invalid_argument("reconstruct: model order does not match shape");
    for (std::size_t k = 0; k < m.order(); ++k)
        if (m.factors[k].rows() != shape.extent(k))
            throw std::invalid_argument("reconstruct: factor rows do not match shape");
}

inline Matrix scale_columns(const Matrix& a, const std::vector<double>& w) {
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) *= w[j];
    return out;
}

}  // namespace detail

/// Dense reconstruction: sum of rank-1 outer products, evaluated through the
/// mode-0 matricization so the result lands directly in row-major order.
inline DenseTensor reconstruct(const KruskalModel& m, const Shape& shape) {
    detail::check_model_shape(m, shape);
    const std::size_t rank = m.rank();
    const Matrix a0 = detail::scale_columns(m.factors[0], m.lambda);

    std::vector<const Matrix*> rest;
    for (std::size_t k = 1; k < m.order(); ++k) rest.push_back(&m.factors[k]);
    const Matrix kr = detail::ascending_khatri_rao(
        std::span<const Matrix* const>(rest.data(), rest.size()), 0, rest.size(), rank);

    DenseTensor out(shape);
    detail::gemm_bt(a0.data(), kr.data(), out.data(), a0.rows(), rank, kr.rows());
    return out;
}

/// Fitness value together with the raw (unclamped) residual radicand
/// ||X||^2 - 2<X,K> + ||K||^2, which can round slightly negative near an
/// exact fit and is recorded for diagnostics.
struct FitnessResult {
    double fitness;
    double raw_radicand;
};

inline FitnessResult fitness_direct(const DenseTensor& x, const KruskalModel& m) {
    const double norm_x = frobenius_norm(x);
    if (norm_x == 0.0) throw std::invalid_argument("fitness_direct: zero-norm tensor");
    const DenseTensor k = reconstruct(m, x.shape());
    const double raw = norm_x * norm_x - 2.0 * inner(x, k) + inner(k, k);
    const double rad = raw < 0.0 ? 0.0 : raw;
    return {1.0 - std::sqrt(rad) / norm_x, raw};
}

/// Fitness from the final mode of an ALS sweep: <X,K> = <M_n, A_hat_n> and
/// ||K||^2 = <Gamma_n, diag(lambda) S_n diag(lambda)>.
inline FitnessResult fitness_fast_als(double norm_x_sq, const Matrix& m_last,
                                      const Matrix& a_hat_last, const Matrix& gamma_last,
                                      const std::vector<double>& lambda,
                                      const Matrix& s_last) {
    if (!(norm_x_sq > 0.0)) throw std::invalid_argument("fitness_fast_als: zero-norm tensor");
    const double xk = dot(m_last, a_hat_last);
    const std::size_t r = lambda.size();
    if (gamma_last.rows() != r || s_last.rows() != r)
        throw std::invalid_argument("fitness_fast_als: dimension mismatch");
    double kk = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            kk += gamma_last(i, j) * lambda[i] * s_last(i, j) * lambda[j];
    const double raw = norm_x_sq - 2.0 * xk + kk;
    const double rad = raw < 0.0 ? 0.0 : raw;
    return {1.0 - std::sqrt(rad) / std::sqrt(norm_x_sq), raw};
}

/// Fitness from the final mode of a QR sweep: <X,K> = <V_n, A_hat R_0^T>
/// and ||K||^2 = <R_0^T R_0, diag(lambda) R_n^T R_n diag(lambda)>, with R_n
/// from the QR of the just-updated normalized factor.
inline FitnessResult fitness_fast_qr(double norm_x_sq, const Matrix& v_n,
                                     const Matrix& a_hat, const Matrix& r0,
                                     const Matrix& r_n, const std::vector<double>& lambda) {
    if (!(norm_x_sq > 0.0)) throw std::invalid_argument("fitness_fast_qr: zero-norm tensor");
    if (v_n.rows() != a_hat.rows() || v_n.cols() != a_hat.cols())
        throw std::invalid_argument("fitness_fast_qr: V and A_hat dimensions differ");
    const std::size_t r = lambda.size();
    if (r0.rows() != r || r0.cols() != r || r_n.rows() != r || r_n.cols() != r)
        throw std::invalid_argument("fitness_fast_qr: triangular factor dimension mismatch");
    const double xk = dot(v_n, matmul(a_hat, transpose(r0)));
    const Matrix g0 = gram(r0);
    const Matrix gn = gram(r_n);
    double kk = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            kk += g0(i, j) * lambda[i] * gn(i, j) * lambda[j];
    const double raw = norm_x_sq - 2.0 * xk + kk;
    const double rad = raw < 0.0 ? 0.0 : raw;
    return {1.0 - std::sqrt(rad) / std::sqrt(norm_x_sq), raw};
}

}  // namespace cpd

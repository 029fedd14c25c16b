// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpd {

/// Mode extents of a dense tensor. Every extent is at least 1 and the total
/// element count must be representable.
class Shape {
public:
    Shape() = default;

    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw std::invalid_argument("Shape: order must be >= 1");
        std::size_t count = 1;
        for (std::size_t d : dims_) {
            if (d == 0) throw std::invalid_argument("Shape: every extent must be >= 1");
            if (d > std::numeric_limits<std::size_t>::max() / count)
                throw std::invalid_argument("Shape: element count overflows");
            count *= d;
        }
        count_ = count;
    }

    Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

    std::size_t order() const { return dims_.size(); }
    std::size_t extent(std::size_t mode) const { return dims_.at(mode); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t element_count() const { return count_; }

    /// Row-major linear index (last mode varies fastest).
    std::size_t linear_index(std::span<const std::size_t> idx) const {
        std::size_t lin = 0;
        for (std::size_t k = 0; k < dims_.size(); ++k) lin = lin * dims_[k] + idx[k];
        return lin;
    }

    bool operator==(const Shape& other) const { return dims_ == other.dims_; }
    bool operator!=(const Shape& other) const { return !(*this == other); }

private:
    std::vector<std::size_t> dims_;
    std::size_t count_ = 0;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0) throw std::invalid_argument("Matrix: zero dimension");
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (rows == 0 || cols == 0) throw std::invalid_argument("Matrix: zero dimension");
        if (values_.size() != rows * cols)
            throw std::invalid_argument("Matrix: value count does not match rows*cols");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Dense N-mode tensor, row-major (last index varies fastest).
class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(Shape shape)
        : shape_(std::move(shape)), values_(shape_.element_count(), 0.0) {}

    DenseTensor(Shape shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != shape_.element_count())
            throw std::invalid_argument("DenseTensor: value count does not match shape");
    }

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.order(); }
    std::size_t size() const { return values_.size(); }

    double at(std::span<const std::size_t> idx) const {
        return values_[shape_.linear_index(idx)];
    }
    double& at(std::span<const std::size_t> idx) { return values_[shape_.linear_index(idx)]; }
    double at(std::initializer_list<std::size_t> idx) const {
        return at(std::span<const std::size_t>(idx.begin(), idx.size()));
    }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

private:
    Shape shape_;
    std::vector<double> values_;
};

namespace detail {

/// C = A * B, all row-major, C overwritten. ikj loop order keeps the inner
/// loop contiguous in both B and C.
inline void gemm(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

/// C = A * B^T with A (m x k), B (n x k): rows of both operands are
/// contiguous, so the inner loop is a plain dot product.
inline void gemm_bt(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double sum = 0.0;
            for (std::size_t p = 0; p < k; ++p) sum += arow[p] * brow[p];
            crow[j] = sum;
        }
    }
}

/// C = A^T * B with A (k x m), B (k x n).
inline void gemm_at(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace detail

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    detail::gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// A^T A.
inline Matrix gram(const Matrix& a) {
    Matrix g(a.cols(), a.cols());
    detail::gemm_at(a.data(), a.data(), g.data(), a.cols(), a.rows(), a.cols());
    return g;
}

inline double dot(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

/// Mode-n unfolding. Row r holds the mode-n fiber with index r; the column
/// index runs over the remaining modes with the earliest mode varying
/// fastest, which matches the reversed Kronecker/Khatri-Rao ordering used
/// throughout this library.
inline Matrix unfold(const DenseTensor& t, std::size_t mode) {
    const auto& dims = t.shape().dims();
    const std::size_t order = dims.size();
    if (mode >= order) throw std::invalid_argument("unfold: mode out of range");
    const std::size_t rows = dims[mode];
    const std::size_t cols = t.size() / rows;

    // Column weight of mode k: product of the extents of modes before k,
    // skipping the unfolding mode.
    std::vector<std::size_t> weight(order, 0);
    std::size_t w = 1;
    for (std::size_t k = 0; k < order; ++k) {
        if (k == mode) continue;
        weight[k] = w;
        w *= dims[k];
    }

    Matrix out(rows, cols);
    std::vector<std::size_t> idx(order, 0);
    std::size_t row = 0, col = 0;
    const double* src = t.data();
    const std::size_t total = t.size();
    for (std::size_t lin = 0; lin < total; ++lin) {
        out(row, col) = src[lin];
        for (std::size_t p = order; p-- > 0;) {
            ++idx[p];
            if (p == mode) ++row; else col += weight[p];
            if (idx[p] < dims[p]) break;
            idx[p] = 0;
            if (p == mode) row = 0; else col -= weight[p] * dims[p];
        }
    }
    return out;
}

/// Inverse of unfold: exact round trip fold(unfold(t, n), n, t.shape()) == t.
inline DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
    const auto& dims = shape.dims();
    const std::size_t order = dims.size();
    if (mode >= order) throw std::invalid_argument("fold: mode out of range");
    if (m.rows() != dims[mode] || m.cols() != shape.element_count() / dims[mode])
        throw std::invalid_argument("fold: matrix dimensions do not match shape");

    std::vector<std::size_t> weight(order, 0);
    std::size_t w = 1;
    for (std::size_t k = 0; k < order; ++k) {
        if (k == mode) continue;
        weight[k] = w;
        w *= dims[k];
    }

    DenseTensor out(shape);
    std::vector<std::size_t> idx(order, 0);
    std::size_t row = 0, col = 0;
    double* dst = out.data();
    const std::size_t total = out.size();
    for (std::size_t lin = 0; lin < total; ++lin) {
        dst[lin] = m(row, col);
        for (std::size_t p = order; p-- > 0;) {
            ++idx[p];
            if (p == mode) ++row; else col += weight[p];
            if (idx[p] < dims[p]) break;
            idx[p] = 0;
            if (p == mode) row = 0; else col -= weight[p] * dims[p];
        }
    }
    return out;
}

/// Tensor-times-matrix along one mode: replaces extent I_mode by b.rows(),
/// with unfold(result, mode) == b * unfold(t, mode).
inline DenseTensor ttm(const DenseTensor& t, const Matrix& b, std::size_t mode) {
    const auto& dims = t.shape().dims();
    const std::size_t order = dims.size();
    if (mode >= order) throw std::invalid_argument("ttm: mode out of range");
    if (b.cols() != dims[mode])
        throw std::invalid_argument("ttm: matrix columns do not match mode extent");

    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < mode; ++k) outer *= dims[k];
    for (std::size_t k = mode + 1; k < order; ++k) inner *= dims[k];
    const std::size_t extent = dims[mode];
    const std::size_t rows = b.rows();

    std::vector<std::size_t> out_dims = dims;
    out_dims[mode] = rows;
    DenseTensor out{Shape(out_dims)};

    if (inner == 1) {
        // Contracting the innermost mode: one (outer x extent) * b^T product.
        detail::gemm_bt(t.data(), b.data(), out.data(), outer, extent, rows);
    } else {
        for (std::size_t o = 0; o < outer; ++o) {
            detail::gemm(b.data(), t.data() + o * extent * inner,
                         out.data() + o * rows * inner, rows, extent, inner);
        }
    }
    return out;
}

struct ModeMatrix {
    std::size_t mode;
    const Matrix* matrix;
};

/// Sequential TTM over distinct modes, contracted in the order given.
/// Mode-disjoint contractions commute, so any order yields the same result
/// up to rounding.
inline DenseTensor multi_ttm(const DenseTensor& t, std::span<const ModeMatrix> pairs) {
    std::vector<bool> seen(t.order(), false);
    for (const auto& p : pairs) {
        if (p.mode >= t.order()) throw std::invalid_argument("multi_ttm: mode out of range");
        if (seen[p.mode]) throw std::invalid_argument("multi_ttm: duplicate mode");
        seen[p.mode] = true;
    }
    DenseTensor out = t;
    for (const auto& p : pairs) out = ttm(out, *p.matrix, p.mode);
    return out;
}

inline DenseTensor multi_ttm(const DenseTensor& t, std::initializer_list<ModeMatrix> pairs) {
    return multi_ttm(t, std::span<const ModeMatrix>(pairs.begin(), pairs.size()));
}

/// Khatri-Rao (column-wise Kronecker) product folded left-to-right over the
/// list as given; the last argument's row index varies fastest.
inline Matrix khatri_rao(std::span<const Matrix* const> mats) {
    if (mats.empty()) throw std::invalid_argument("khatri_rao: empty list");
    const std::size_t cols = mats[0]->cols();
    std::size_t rows = 1;
    for (const Matrix* m : mats) {
        if (m->cols() != cols)
            throw std::invalid_argument("khatri_rao: mismatched column counts");
        rows *= m->rows();
    }
    Matrix out(rows, cols);
    // Build incrementally: out_{k+1}(i*K + r, j) = out_k(i, j) * m(r, j).
    std::size_t cur_rows = mats[0]->rows();
    std::vector<double> cur(mats[0]->values());
    std::vector<double> next;
    for (std::size_t li = 1; li < mats.size(); ++li) {
        const Matrix& m = *mats[li];
        next.assign(cur_rows * m.rows() * cols, 0.0);
        for (std::size_t i = 0; i < cur_rows; ++i)
            for (std::size_t r = 0; r < m.rows(); ++r)
                for (std::size_t j = 0; j < cols; ++j)
                    next[(i * m.rows() + r) * cols + j] = cur[i * cols + j] * m(r, j);
        cur.swap(next);
        cur_rows *= m.rows();
    }
    return Matrix(rows, cols, std::move(cur));
}

inline Matrix khatri_rao(std::initializer_list<const Matrix*> mats) {
    return khatri_rao(std::span<const Matrix* const>(mats.begin(), mats.size()));
}

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double av = a(i, j);
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = av * b(k, l);
        }
    return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("hadamard: dimension mismatch");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

inline double inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("inner: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

inline double frobenius_norm(const DenseTensor& t) {
    double s = 0.0;
    for (double v : t.values()) s += v * v;
    return std::sqrt(s);
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return std::sqrt(s);
}

namespace detail {

inline void check_mttkrp_args(const DenseTensor& t,
                              std::span<const Matrix* const> factors, std::size_t mode) {
    const auto& dims = t.shape().dims();
    if (mode >= dims.size()) throw std::invalid_argument("mttkrp: mode out of range");
    if (factors.size() != dims.size())
        throw std::invalid_argument("mttkrp: need one factor per mode");
    std::size_t rank = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k == mode) continue;
        const Matrix* f = factors[k];
        if (f == nullptr) throw std::invalid_argument("mttkrp: missing factor");
        if (rank == 0) rank = f->cols();
        if (f->cols() != rank) throw std::invalid_argument("mttkrp: mismatched ranks");
        if (f->rows() != dims[k])
            throw std::invalid_argument("mttkrp: factor rows do not match mode extent");
    }
}

/// Khatri-Rao of factors[first..last) in ascending mode order, i.e. with the
/// highest mode varying fastest -- the row ordering of a row-major tensor's
/// trailing (or leading) index block.
inline Matrix ascending_khatri_rao(std::span<const Matrix* const> factors,
                                   std::size_t first, std::size_t last, std::size_t rank) {
    if (first >= last) {
        Matrix ones(1, rank);
        for (std::size_t j = 0; j < rank; ++j) ones(0, j) = 1.0;
        return ones;
    }
    std::vector<const Matrix*> list;
    for (std::size_t k = first; k < last; ++k) list.push_back(factors[k]);
    return khatri_rao(std::span<const Matrix* const>(list.data(), list.size()));
}

}  // namespace detail

/// Matricized-tensor times Khatri-Rao product, streaming path: never forms
/// the full Khatri-Rao of all off-mode factors, only the leading and
/// trailing blocks around the target mode.
inline Matrix mttkrp(const DenseTensor& t, std::span<const Matrix* const> factors,
                     std::size_t mode) {
    detail::check_mttkrp_args(t, factors, mode);
    const auto& dims = t.shape().dims();
    const std::size_t order = dims.size();
    std::size_t rank = 0;
    for (std::size_t k = 0; k < order; ++k)
        if (k != mode) { rank = factors[k]->cols(); break; }
    if (rank == 0) throw std::invalid_argument("mttkrp: order must be >= 2");

    std::size_t left = 1, inner = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= dims[k];
    for (std::size_t k = mode + 1; k < order; ++k) inner *= dims[k];
    const std::size_t extent = dims[mode];

    Matrix out(extent, rank);
    const Matrix kl = detail::ascending_khatri_rao(factors, 0, mode, rank);
    if (mode + 1 == order) {
        // Innermost mode: single (left x extent)^T * KL product.
        detail::gemm_at(t.data(), kl.data(), out.data(), extent, left, rank);
        return out;
    }
    const Matrix kr = detail::ascending_khatri_rao(factors, mode + 1, order, rank);
    Matrix slab(extent, rank);
    for (std::size_t l = 0; l < left; ++l) {
        detail::gemm(t.data() + l * extent * inner, kr.data(), slab.data(),
                     extent, inner, rank);
        const double* klrow = kl.data() + l * rank;
        for (std::size_t i = 0; i < extent; ++i) {
            double* orow = out.data() + i * rank;
            const double* srow = slab.data() + i * rank;
            for (std::size_t j = 0; j < rank; ++j) orow[j] += klrow[j] * srow[j];
        }
    }
    return out;
}

/// Reference MTTKRP that materializes the full Khatri-Rao product
/// (descending mode order, omitting the target mode) and multiplies it by
/// the mode-n unfolding. Kept as the independent check for the streaming
/// path; quadratic memory in the off-mode extents.
inline Matrix mttkrp_materialized(const DenseTensor& t,
                                  std::span<const Matrix* const> factors,
                                  std::size_t mode) {
    detail::check_mttkrp_args(t, factors, mode);
    const std::size_t order = t.order();
    std::vector<const Matrix*> desc;
    for (std::size_t k = order; k-- > 0;)
        if (k != mode) desc.push_back(factors[k]);
    const Matrix p = khatri_rao(std::span<const Matrix* const>(desc.data(), desc.size()));
    return matmul(unfold(t, mode), p);
}

inline Matrix mttkrp(const DenseTensor& t, const std::vector<const Matrix*>& factors,
                     std::size_t mode) {
    return mttkrp(t, std::span<const Matrix* const>(factors.data(), factors.size()), mode);
}

inline Matrix mttkrp_materialized(const DenseTensor& t,
                                  const std::vector<const Matrix*>& factors,
                                  std::size_t mode) {
    return mttkrp_materialized(
        t, std::span<const Matrix* const>(factors.data(), factors.size()), mode);
}

}  // namespace cpd

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cpd/kruskal.hpp"
#include "cpd/linalg.hpp"
#include "cpd/rng.hpp"
#include "cpd/tensor.hpp"

namespace cpd::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

inline DenseTensor random_tensor(const Shape& shape, Rng& rng) {
    DenseTensor t(shape);
    for (double& v : t.values()) v = rng.normal();
    return t;
}

inline KruskalModel random_model(const Shape& shape, std::size_t rank, Rng& rng) {
    KruskalModel m;
    m.lambda.resize(rank);
    for (double& w : m.lambda) w = std::abs(rng.normal()) + 0.1;
    for (std::size_t k = 0; k < shape.order(); ++k)
        m.factors.push_back(normalize_columns(random_matrix(shape.extent(k), rank, rng)).matrix);
    return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

inline double rel_fro_diff(const Matrix& a, const Matrix& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        num += d * d;
        den += b.data()[i] * b.data()[i];
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline double rel_fro_diff(const DenseTensor& a, const DenseTensor& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        num += d * d;
        den += b.data()[i] * b.data()[i];
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace cpd::testing

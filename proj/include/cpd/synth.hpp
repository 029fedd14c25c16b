// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cpd/kruskal.hpp"
#include "cpd/linalg.hpp"
#include "cpd/rng.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

struct generation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parameters of a synthetic tensor: target shape, true rank, per-mode
/// factor collinearity, and two-stage noise levels (each in [0,100)).
struct SynthSpec {
    Shape dims;
    std::size_t true_rank = 1;
    std::vector<double> collinearity;
    double l1 = 0.0;
    double l2 = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (true_rank == 0) throw std::invalid_argument("SynthSpec: rank must be >= 1");
        if (collinearity.size() != dims.order())
            throw std::invalid_argument("SynthSpec: need one collinearity value per mode");
        for (double c : collinearity)
            if (!(c >= 0.0 && c < 1.0))
                throw std::invalid_argument("SynthSpec: collinearity must be in [0,1)");
        for (double l : {l1, l2})
            if (!(l >= 0.0 && l < 100.0))
                throw std::invalid_argument("SynthSpec: noise level must be in [0,100)");
        for (std::size_t k = 0; k < dims.order(); ++k)
            if (true_rank > dims.extent(k))
                throw std::invalid_argument("SynthSpec: rank exceeds a mode extent");
    }
};

/// Factor matrix with prescribed column collinearity: the Gram of the result
/// equals K (unit diagonal, off-diagonal c) by construction. Draws an
/// extent-by-rank standard-normal matrix row by row, orthonormalizes it with
/// a thin QR, and multiplies by the upper-triangular Cholesky factor of K.
inline Matrix collinear_factor(std::size_t extent, std::size_t rank, double c, Rng& rng) {
    if (rank > extent) throw std::invalid_argument("collinear_factor: rank exceeds extent");
    if (!(c >= 0.0 && c < 1.0))
        throw std::invalid_argument("collinear_factor: collinearity must be in [0,1)");

    Matrix k(rank, rank);
    for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t j = 0; j < rank; ++j) k(i, j) = i == j ? 1.0 : c;
    auto chol = detail::cholesky_lower(k);
    if (!chol)
        throw generation_error("collinear_factor: collinearity Gram is not positive definite");
    const Matrix c_upper = transpose(*chol);

    Matrix m(extent, rank);
    for (std::size_t i = 0; i < extent; ++i)
        for (std::size_t j = 0; j < rank; ++j) m(i, j) = rng.normal();
    return matmul(thin_qr(m).q, c_upper);
}

struct SynthResult {
    DenseTensor tensor;
    KruskalModel truth;
};

/// Assemble the synthetic tensor: collinear factors with unit weights, then
/// an optional homoscedastic stage (standard-normal noise scaled so that
/// ||noise|| / ||X|| = 1/sqrt(100/l1 - 1)) and an optional heteroscedastic
/// stage (sd-3 noise scaled the same way relative to the stage-1 output).
/// Draw order: factors for modes 0..N-1, then stage-1 noise, then stage-2.
inline SynthResult assemble_noisy_tensor(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    KruskalModel truth;
    truth.lambda.assign(spec.true_rank, 1.0);
    for (std::size_t n = 0; n < spec.dims.order(); ++n)
        truth.factors.push_back(
            collinear_factor(spec.dims.extent(n), spec.true_rank, spec.collinearity[n], rng));

    DenseTensor x = reconstruct(truth, spec.dims);
    if (spec.l1 > 0.0) {
        DenseTensor noise(spec.dims);
        for (double& v : noise.values()) v = rng.normal();
        const double scale = (1.0 / std::sqrt(100.0 / spec.l1 - 1.0)) *
                             (frobenius_norm(x) / frobenius_norm(noise));
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += scale * noise.data()[i];
    }
    if (spec.l2 > 0.0) {
        DenseTensor noise(spec.dims);
        for (double& v : noise.values()) v = 3.0 * rng.normal();
        const double scale = (1.0 / std::sqrt(100.0 / spec.l2 - 1.0)) *
                             (frobenius_norm(x) / frobenius_norm(noise));
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += scale * noise.data()[i];
    }
    return {std::move(x), std::move(truth)};
}

}  // namespace cpd

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cpd/linalg.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

/// Per-mode factor with its thin-QR pair and a version counter that is
/// bumped on every update. Cached contraction intermediates stamp the
/// versions of the factors they absorbed; a stamp mismatch means the
/// intermediate is stale.
struct FactorEntry {
    Matrix factor;
    QrPair qr;
    std::uint64_t version = 0;
};

struct FactorState {
    std::vector<FactorEntry> modes;
    std::vector<double> lambda;

    static FactorState from_factors(const std::vector<Matrix>& factors) {
        FactorState s;
        for (const auto& f : factors)
            s.modes.push_back({f, thin_qr(f), 1});
        if (!factors.empty()) s.lambda.assign(factors[0].cols(), 1.0);
        return s;
    }

    std::size_t order() const { return modes.size(); }

    std::uint64_t version(std::size_t mode) const { return modes.at(mode).version; }
    const Matrix& q(std::size_t mode) const { return modes.at(mode).qr.q; }
    const Matrix& r(std::size_t mode) const { return modes.at(mode).qr.r; }

    void update(std::size_t mode, Matrix factor) {
        auto& e = modes.at(mode);
        e.qr = thin_qr(factor);
        e.factor = std::move(factor);
        ++e.version;
    }
};

}  // namespace cpd

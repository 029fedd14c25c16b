// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cpd/dim_tree.hpp"
#include "cpd/factor_state.hpp"
#include "cpd/kruskal.hpp"
#include "cpd/linalg.hpp"
#include "cpd/rng.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

enum class Algorithm { als, als_qr };

struct SolverConfig {
    std::size_t rank = 1;
    std::size_t max_iterations = 1;
    double fitness_threshold = 1.0;
    Algorithm algorithm = Algorithm::als;
    Strategy strategy = Strategy::naive;
    bool extrapolation_enabled = false;
    double alpha = 0.1;
    std::optional<double> beta_override;
    double activation_gap = 0.03;
    std::uint64_t seed = 0;

    /// Optional hook invoked with the freshly computed Q0 of every mode
    /// update (before extrapolation). Test instrumentation only.
    std::function<void(std::size_t sweep, std::size_t mode, const Matrix& q0)> q0_observer;

    void validate() const {
        if (rank == 0) throw std::invalid_argument("SolverConfig: rank must be >= 1");
        if (max_iterations == 0)
            throw std::invalid_argument("SolverConfig: need at least one iteration");
        if (!(fitness_threshold >= 0.0 && fitness_threshold <= 1.0))
            throw std::invalid_argument("SolverConfig: fitness threshold must be in [0,1]");
        if (!std::isfinite(alpha) || !std::isfinite(activation_gap))
            throw std::invalid_argument("SolverConfig: alpha and activation gap must be finite");
    }
};

/// One row per completed sweep. root_ttm_count and flops are cumulative
/// TTM-kernel tallies (the normal-equation path reports its MTTKRP kernel
/// flops and no root TTMs); wall_seconds is elapsed time since the run
/// began.
struct TraceRow {
    std::size_t iteration = 0;               // 1-based sweep index
    std::vector<std::size_t> update_order;   // 0-based modes
    double fitness = 0.0;
    double raw_radicand = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t root_ttm_count = 0;
    std::uint64_t flops = 0;
    double beta_used = 0.0;
    bool regularized = false;
};

struct SolveResult {
    KruskalModel model;
    std::vector<TraceRow> trace;
};

/// Q0 extrapolation: q0_now + beta * (q0_now - alpha * q0_prev).
/// beta == 0 returns q0_now unchanged, bit for bit.
inline Matrix extrapolate_q0(const Matrix& q0_now, const Matrix& q0_prev, double beta,
                             double alpha) {
    if (q0_now.rows() != q0_prev.rows() || q0_now.cols() != q0_prev.cols())
        throw std::invalid_argument("extrapolate_q0: shape mismatch");
    if (beta == 0.0) return q0_now;
    Matrix out(q0_now.rows(), q0_now.cols());
    for (std::size_t i = 0; i < q0_now.size(); ++i) {
        const double now = q0_now.data()[i];
        out.data()[i] = now + beta * (now - alpha * q0_prev.data()[i]);
    }
    return out;
}

/// Extrapolation weight selection: stays off while the fitness gap between
/// consecutive sweeps is at or above the threshold; otherwise picks 1/2000,
/// 1/500, or 1/250 by the current fitness band. Callers freeze the first
/// returned value for the rest of the run.
inline std::optional<double> select_beta(double fitness_prev, double fitness_now,
                                         double gap_threshold) {
    auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    const double prev = clamp01(fitness_prev);
    const double now = clamp01(fitness_now);
    if (std::abs(now - prev) >= gap_threshold) return std::nullopt;
    if (now > 0.90) return 1.0 / 2000.0;
    if (now >= 0.70) return 1.0 / 500.0;
    return 1.0 / 250.0;
}

namespace detail {

inline std::vector<Matrix> initial_factors(const DenseTensor& x, const SolverConfig& cfg,
                                           const std::optional<KruskalModel>& init) {
    const std::size_t order = x.order();
    if (init) {
        if (init->order() != order || init->rank() != cfg.rank)
            throw std::invalid_argument("solver: init model does not match tensor/config");
        for (std::size_t k = 0; k < order; ++k)
            if (init->factors[k].rows() != x.shape().extent(k))
                throw std::invalid_argument("solver: init factor rows do not match tensor");
        return init->factors;
    }
    Rng rng(cfg.seed);
    std::vector<Matrix> factors;
    for (std::size_t k = 0; k < order; ++k) {
        Matrix f(x.shape().extent(k), cfg.rank);
        for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
        factors.push_back(normalize_columns(f).matrix);
    }
    return factors;
}

inline std::vector<double> initial_lambda(const std::optional<KruskalModel>& init,
                                          std::size_t rank) {
    if (init) return init->lambda;
    return std::vector<double>(rank, 1.0);
}

class WallClock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Alternating least squares through the normal equations: per mode the
/// Gram Hadamard product, an MTTKRP, and an SPD solve, with column
/// normalization after every update. Fitness is evaluated once per sweep
/// from the last mode's intermediates.
inline SolveResult cp_als(const DenseTensor& x, const SolverConfig& cfg,
                          const std::optional<KruskalModel>& init = {}) {
    cfg.validate();
    if (cfg.algorithm != Algorithm::als)
        throw std::invalid_argument("cp_als: config algorithm must be als");
    if (x.order() < 2) throw std::invalid_argument("cp_als: tensor order must be >= 2");
    const double norm_x_sq = inner(x, x);
    if (norm_x_sq == 0.0) throw std::invalid_argument("cp_als: zero-norm tensor");

    const std::size_t order = x.order();
    const std::size_t rank = cfg.rank;
    std::vector<Matrix> factors = detail::initial_factors(x, cfg, init);
    std::vector<double> lambda = detail::initial_lambda(init, rank);
    std::vector<Matrix> grams;
    for (const auto& f : factors) grams.push_back(gram(f));

    // MTTKRP kernel flops per mode: one pass over the tensor per rank column.
    std::uint64_t mttkrp_flops = 2ull * x.size() * rank;

    detail::WallClock clock;
    SolveResult result;
    std::uint64_t flops = 0;
    std::vector<std::size_t> update_order(order);
    for (std::size_t k = 0; k < order; ++k) update_order[k] = k;

    for (std::size_t sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
        Matrix m_last, a_hat_last, gamma_last;
        bool regularized = false;
        for (std::size_t n = 0; n < order; ++n) {
            Matrix gamma(rank, rank);
            for (std::size_t i = 0; i < gamma.size(); ++i) gamma.data()[i] = 1.0;
            for (std::size_t k = 0; k < order; ++k)
                if (k != n) gamma = hadamard(gamma, grams[k]);

            std::vector<const Matrix*> ptrs;
            for (const auto& f : factors) ptrs.push_back(&f);
            Matrix m = mttkrp(x, ptrs, n);
            auto solved = solve_spd(gamma, m);
            regularized = regularized || solved.regularized;
            auto normalized = normalize_columns(solved.x);
            factors[n] = std::move(normalized.matrix);
            lambda = std::move(normalized.weights);
            grams[n] = gram(factors[n]);
            flops += mttkrp_flops;
            if (n + 1 == order) {
                m_last = std::move(m);
                a_hat_last = std::move(solved.x);
                gamma_last = std::move(gamma);
            }
        }
        const FitnessResult fit =
            fitness_fast_als(norm_x_sq, m_last, a_hat_last, gamma_last, lambda,
                             grams[order - 1]);
        result.trace.push_back({sweep, update_order, fit.fitness, fit.raw_radicand,
                                clock.seconds(), 0, flops, 0.0, regularized});
        if (fit.fitness >= cfg.fitness_threshold) break;
    }
    result.model = {std::move(lambda), std::move(factors)};
    return result;
}

namespace detail {

/// Shared driver for the QR-based variants. Extrapolation state is only
/// engaged when enabled; with beta == 0 the executed operations are
/// identical to the plain run.
inline SolveResult run_qr(const DenseTensor& x, const SolverConfig& cfg,
                          const std::optional<KruskalModel>& init, bool extrapolate) {
    cfg.validate();
    if (x.order() < 2) throw std::invalid_argument("cp_als_qr: tensor order must be >= 2");
    const double norm_x_sq = inner(x, x);
    if (norm_x_sq == 0.0) throw std::invalid_argument("cp_als_qr: zero-norm tensor");
    for (std::size_t k = 0; k < x.order(); ++k)
        if (cfg.rank > x.shape().extent(k))
            throw std::invalid_argument(
                "cp_als_qr: rank must not exceed any mode extent (compact QR)");

    const std::size_t order = x.order();
    const std::size_t rank = cfg.rank;
    FactorState state = FactorState::from_factors(initial_factors(x, cfg, init));
    state.lambda = initial_lambda(init, rank);

    const Schedule schedule = build_schedule(order, cfg.strategy, cfg.max_iterations);
    IntermediateCache cache;

    // Per-mode history of the previous sweep's (unextrapolated) Q0.
    std::vector<std::optional<Matrix>> q0_history(order);
    std::optional<double> active_beta;
    if (extrapolate && cfg.beta_override) active_beta = *cfg.beta_override;

    WallClock clock;
    SolveResult result;
    CostReport total_cost;

    for (std::size_t sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
        Matrix v_last, a_hat_last, r0_last;
        std::size_t last_mode = 0;
        double beta_used = 0.0;
        const std::vector<std::size_t> update_order = schedule.update_order(sweep - 1);

        for (std::size_t n : update_order) {
            std::vector<const Matrix*> r_desc;
            for (std::size_t k = order; k-- > 0;)
                if (k != n) r_desc.push_back(&state.r(k));
            const Matrix z = khatri_rao(std::span<const Matrix* const>(r_desc.data(),
                                                                       r_desc.size()));
            QrPair z_qr = thin_qr(z);
            if (cfg.q0_observer) cfg.q0_observer(sweep, n, z_qr.q);

            const Matrix* q_used = &z_qr.q;
            Matrix q_extrapolated;
            if (extrapolate && active_beta && *active_beta != 0.0 && q0_history[n]) {
                q_extrapolated = extrapolate_q0(z_qr.q, *q0_history[n], *active_beta, cfg.alpha);
                q_used = &q_extrapolated;
                beta_used = *active_beta;
            }
            if (extrapolate) q0_history[n] = z_qr.q;

            auto [y, cost] = execute(schedule, x, state, cache, sweep - 1, n);
            total_cost.merge(cost);

            const Matrix y_n = unfold(y, n);
            Matrix v = matmul(y_n, *q_used);
            Matrix a_hat = solve_rows_lower_triangular(transpose(z_qr.r), v);
            auto normalized = normalize_columns(a_hat);
            state.lambda = std::move(normalized.weights);
            state.update(n, std::move(normalized.matrix));

            if (n == update_order.back() && q_used != &z_qr.q) {
                // The sweep-final fitness identity <X,K> = <V, A_hat R0^T>
                // holds only for the unextrapolated Q0; with the
                // extrapolated V it saturates once the residual drops below
                // the extrapolation perturbation. Recompute V for fitness;
                // the factor update above keeps the extrapolated one.
                v = matmul(y_n, z_qr.q);
            }
            v_last = std::move(v);
            a_hat_last = std::move(a_hat);
            r0_last = std::move(z_qr.r);
            last_mode = n;
        }

        const FitnessResult fit = fitness_fast_qr(norm_x_sq, v_last, a_hat_last, r0_last,
                                                  state.r(last_mode), state.lambda);
        result.trace.push_back({sweep, update_order, fit.fitness, fit.raw_radicand,
                                clock.seconds(), total_cost.root_ttm_count,
                                total_cost.total_flops, beta_used, false});

        if (extrapolate && !active_beta && !cfg.beta_override && sweep >= 2) {
            const double prev = result.trace[result.trace.size() - 2].fitness;
            active_beta = select_beta(prev, fit.fitness, cfg.activation_gap);
        }
        if (fit.fitness >= cfg.fitness_threshold) break;
    }

    KruskalModel model;
    model.lambda = state.lambda;
    for (auto& e : state.modes) model.factors.push_back(std::move(e.factor));
    result.model = std::move(model);
    return result;
}

}  // namespace detail

/// QR-based alternating least squares. Per mode: Khatri-Rao of the other
/// triangular factors, its thin QR, the scheduled multi-TTM for Y, then a
/// row-wise triangular solve and renormalization. The Y-computation
/// strategy (naive / dim-tree / branch-reuse) comes from the config.
inline SolveResult cp_als_qr(const DenseTensor& x, const SolverConfig& cfg,
                             const std::optional<KruskalModel>& init = {}) {
    if (cfg.algorithm != Algorithm::als_qr)
        throw std::invalid_argument("cp_als_qr: config algorithm must be als-qr");
    return detail::run_qr(x, cfg, init, false);
}

/// Branch-reuse QR solver with Q0 extrapolation. Extrapolation activates
/// once the fitness gap between two consecutive sweeps falls below the
/// activation threshold (or immediately when beta_override is set) and the
/// chosen beta stays fixed afterwards. The first sweep never extrapolates;
/// the history always stores the unextrapolated Q0.
inline SolveResult als_qr_bre(const DenseTensor& x, const SolverConfig& cfg,
                              const std::optional<KruskalModel>& init = {}) {
    SolverConfig bre_cfg = cfg;
    bre_cfg.algorithm = Algorithm::als_qr;
    bre_cfg.strategy = Strategy::branch_reuse;
    bre_cfg.extrapolation_enabled = true;
    return detail::run_qr(x, bre_cfg, init, true);
}

}  // namespace cpd

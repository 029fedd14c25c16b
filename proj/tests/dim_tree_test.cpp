// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cpd/dim_tree.hpp"
#include "cpd/factor_state.hpp"
#include "test_util.hpp"

using namespace cpd;
using cpd::testing::random_matrix;
using cpd::testing::random_tensor;
using cpd::testing::rel_fro_diff;

namespace {

constexpr ModeSet kSet012 = 0b111;
constexpr ModeSet kSet01 = 0b011;
constexpr ModeSet kSet02 = 0b101;
constexpr ModeSet kSet12 = 0b110;

std::uint64_t category_count(const CostReport& report, ModeSet i_modes, std::size_t r_power) {
    auto it = report.categories.find({r_power, i_modes});
    return it == report.categories.end() ? 0 : it->second.count;
}

std::uint64_t roots_in_iteration(const Schedule& schedule,
                                 const std::vector<std::size_t>& dims, std::size_t rank,
                                 std::size_t iteration) {
    const std::uint64_t upto = measured_cost(schedule, dims, rank, iteration + 1).root_ttm_count;
    const std::uint64_t before =
        iteration == 0 ? 0 : measured_cost(schedule, dims, rank, iteration).root_ttm_count;
    return upto - before;
}

/// Runs `iterations` full sweeps of a plan against the all-current naive
/// multi-TTM oracle, replacing each updated factor with a fresh random one.
void check_against_oracle(std::size_t order, Strategy strategy,
                          const std::vector<std::size_t>& dims, std::size_t rank,
                          std::size_t iterations, std::uint64_t seed) {
    Rng rng(seed);
    const DenseTensor x = random_tensor(Shape(dims), rng);
    std::vector<Matrix> factors;
    for (std::size_t d : dims)
        factors.push_back(normalize_columns(random_matrix(d, rank, rng)).matrix);
    FactorState state = FactorState::from_factors(factors);
    const Schedule schedule = build_schedule(order, strategy, iterations);
    IntermediateCache cache;

    for (std::size_t iter = 0; iter < iterations; ++iter) {
        for (std::size_t mode : schedule.update_order(iter)) {
            auto [y, cost] = execute(schedule, x, state, cache, iter, mode);

            std::vector<Matrix> q_t;
            for (std::size_t k = 0; k < order; ++k)
                if (k != mode) q_t.push_back(transpose(state.q(k)));
            std::vector<ModeMatrix> pairs;
            std::size_t slot = 0;
            for (std::size_t k = 0; k < order; ++k)
                if (k != mode) pairs.push_back({k, &q_t[slot++]});
            const DenseTensor oracle =
                multi_ttm(x, std::span<const ModeMatrix>(pairs.data(), pairs.size()));

            ASSERT_LT(rel_fro_diff(y, oracle), 1e-12)
                << strategy_name(strategy) << " order " << order << " iteration " << iter
                << " mode " << mode;

            state.update(mode,
                         normalize_columns(random_matrix(dims[mode], rank, rng)).matrix);
        }
    }
}

}  // namespace

TEST(BuildSchedule, NaiveOrder3) {
    const Schedule s = build_schedule(3, Strategy::naive, 2);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(s.update_order(i), (std::vector<std::size_t>{0, 1, 2}));
        EXPECT_EQ(roots_in_iteration(s, {4, 4, 4}, 2, i), 3u);
    }
}

TEST(BuildSchedule, BranchReuseOrder3RootCounts) {
    const Schedule s = build_schedule(3, Strategy::branch_reuse, 3);
    const std::vector<std::size_t> dims = {5, 4, 3};
    EXPECT_EQ(roots_in_iteration(s, dims, 2, 0), 2u);
    EXPECT_EQ(roots_in_iteration(s, dims, 2, 1), 1u);
    EXPECT_EQ(roots_in_iteration(s, dims, 2, 2), 1u);
    EXPECT_EQ(s.cycle_start(), 1u);
    EXPECT_EQ(s.cycle_length(), 2u);
}

TEST(BuildSchedule, DimTreeOrder4RootCount) {
    const Schedule s = build_schedule(4, Strategy::dim_tree, 1);
    EXPECT_EQ(roots_in_iteration(s, {4, 4, 4, 4}, 2, 0), 2u);
}

TEST(BuildSchedule, UnsupportedOrderForTreeStrategies) {
    EXPECT_THROW(build_schedule(5, Strategy::dim_tree, 1), std::invalid_argument);
    EXPECT_THROW(build_schedule(5, Strategy::branch_reuse, 1), std::invalid_argument);
    EXPECT_NO_THROW(build_schedule(5, Strategy::naive, 1));
    EXPECT_NO_THROW(build_schedule(2, Strategy::naive, 1));
}

TEST(MeasuredCost, RootCountsFirstThreeIterations) {
    const std::vector<std::size_t> dims3 = {6, 5, 4};
    const std::vector<std::size_t> dims4 = {6, 5, 4, 3};
    EXPECT_EQ(measured_cost(build_schedule(3, Strategy::naive, 3), dims3, 2).root_ttm_count, 9u);
    EXPECT_EQ(measured_cost(build_schedule(3, Strategy::dim_tree, 3), dims3, 2).root_ttm_count,
              6u);
    EXPECT_EQ(
        measured_cost(build_schedule(3, Strategy::branch_reuse, 3), dims3, 2).root_ttm_count,
        4u);
    EXPECT_EQ(measured_cost(build_schedule(4, Strategy::naive, 3), dims4, 2).root_ttm_count,
              12u);
    EXPECT_EQ(measured_cost(build_schedule(4, Strategy::dim_tree, 3), dims4, 2).root_ttm_count,
              6u);
    EXPECT_EQ(
        measured_cost(build_schedule(4, Strategy::branch_reuse, 3), dims4, 2).root_ttm_count,
        4u);
}

TEST(MeasuredCost, BranchReuseOrder3CategoryTallies) {
    const Schedule s = build_schedule(3, Strategy::branch_reuse, 3);
    const CostReport r = measured_cost(s, {9, 8, 7}, 3, 3);
    EXPECT_EQ(category_count(r, kSet012, 1), 4u);
    EXPECT_EQ(category_count(r, kSet01, 2), 2u);
    EXPECT_EQ(category_count(r, kSet02, 2), 4u);
    EXPECT_EQ(category_count(r, kSet12, 2), 3u);
}

TEST(MeasuredCost, DimTreeOrder3PerIterationTallies) {
    const Schedule s = build_schedule(3, Strategy::dim_tree, 1);
    const CostReport r = measured_cost(s, {9, 8, 7}, 3, 1);
    EXPECT_EQ(category_count(r, kSet012, 1), 2u);
    EXPECT_EQ(category_count(r, kSet01, 2), 2u);
    EXPECT_EQ(category_count(r, kSet02, 2), 1u);
    EXPECT_EQ(category_count(r, kSet12, 2), 0u);
}

TEST(MeasuredCost, DimTreeOrder4PerIterationTallies) {
    const Schedule s = build_schedule(4, Strategy::dim_tree, 1);
    const CostReport r = measured_cost(s, {9, 8, 7, 6}, 3, 1);
    EXPECT_EQ(category_count(r, 0b1111, 1), 2u);  // full contractions
    EXPECT_EQ(category_count(r, 0b0111, 2), 2u);  // I1*I2*I3*R^2
    EXPECT_EQ(category_count(r, 0b0011, 3), 2u);  // I1*I2*R^3
    EXPECT_EQ(category_count(r, 0b0101, 3), 1u);  // I1*I3*R^3
    EXPECT_EQ(category_count(r, 0b1110, 2), 1u);  // I2*I3*I4*R^2
    EXPECT_EQ(category_count(r, 0b1100, 3), 1u);  // I3*I4*R^3
}

TEST(MeasuredCost, SteadyStateOneRootPerIteration) {
    for (std::size_t order : {3u, 4u}) {
        std::vector<std::size_t> dims(order, 5);
        const Schedule s = build_schedule(order, Strategy::branch_reuse, 12);
        for (std::size_t iter = s.cycle_start(); iter < 12; ++iter)
            EXPECT_EQ(roots_in_iteration(s, dims, 2, iter), 1u)
                << "order " << order << " iteration " << iter;
    }
}

TEST(MeasuredCost, MatchesClosedFormForAllPlans) {
    const std::vector<std::size_t> dims3 = {19, 17, 13};
    const std::vector<std::size_t> dims4 = {13, 11, 10, 9};
    for (Strategy s : {Strategy::naive, Strategy::dim_tree, Strategy::branch_reuse}) {
        EXPECT_EQ(measured_cost(build_schedule(3, s, 3), dims3, 4).total_flops,
                  closed_form_cost(3, s, dims3, 4))
            << strategy_name(s);
        EXPECT_EQ(measured_cost(build_schedule(4, s, 3), dims4, 4).total_flops,
                  closed_form_cost(4, s, dims4, 4))
            << strategy_name(s);
    }
}

TEST(ClosedFormCost, HandEvaluatedOrder3) {
    const std::vector<std::size_t> dims = {100, 100, 100};
    const std::size_t r = 10;
    // 18*I1*I2*I3*R + 6*(I1*I2 + I2*I3 + I1*I3)*R^2
    EXPECT_EQ(closed_form_cost(3, Strategy::naive, dims, r),
              18ull * 100 * 100 * 100 * 10 + 6ull * 3 * 100 * 100 * 100);
    EXPECT_EQ(closed_form_cost(3, Strategy::dim_tree, dims, r),
              12ull * 100 * 100 * 100 * 10 + 12ull * 100 * 100 * 100 + 6ull * 100 * 100 * 100);
    EXPECT_EQ(closed_form_cost(3, Strategy::branch_reuse, dims, r),
              8ull * 100 * 100 * 100 * 10 + (4ull + 8 + 6) * 100 * 100 * 100);
}

TEST(ClosedFormCost, LeadingCoefficients) {
    EXPECT_EQ(leading_flop_coefficient(3, Strategy::naive), 18u);
    EXPECT_EQ(leading_flop_coefficient(3, Strategy::dim_tree), 12u);
    EXPECT_EQ(leading_flop_coefficient(3, Strategy::branch_reuse), 8u);
    EXPECT_EQ(leading_flop_coefficient(4, Strategy::naive), 24u);
    EXPECT_EQ(leading_flop_coefficient(4, Strategy::dim_tree), 12u);
    EXPECT_EQ(leading_flop_coefficient(4, Strategy::branch_reuse), 8u);
    // The branch-reuse leading term is two thirds of the dim-tree one.
    EXPECT_EQ(3 * leading_flop_coefficient(3, Strategy::branch_reuse),
              2 * leading_flop_coefficient(3, Strategy::dim_tree));
    EXPECT_EQ(3 * leading_flop_coefficient(4, Strategy::branch_reuse),
              2 * leading_flop_coefficient(4, Strategy::dim_tree));
}

TEST(MeasuredCost, StrategyOrderingWhenDimsDominate) {
    // Total flops: branch-reuse < dim-tree < naive whenever all dims >= 2R.
    const std::size_t r = 3;
    for (const auto& dims :
         {std::vector<std::size_t>{6, 6, 6}, std::vector<std::size_t>{24, 7, 6},
          std::vector<std::size_t>{6, 7, 24}}) {
        const auto naive = measured_cost(build_schedule(3, Strategy::naive, 3), dims, r);
        const auto tree = measured_cost(build_schedule(3, Strategy::dim_tree, 3), dims, r);
        const auto reuse = measured_cost(build_schedule(3, Strategy::branch_reuse, 3), dims, r);
        EXPECT_LT(reuse.total_flops, tree.total_flops);
        EXPECT_LT(tree.total_flops, naive.total_flops);
    }
    for (const auto& dims :
         {std::vector<std::size_t>{6, 6, 6, 6}, std::vector<std::size_t>{24, 7, 6, 8}}) {
        const auto naive = measured_cost(build_schedule(4, Strategy::naive, 3), dims, r);
        const auto tree = measured_cost(build_schedule(4, Strategy::dim_tree, 3), dims, r);
        const auto reuse = measured_cost(build_schedule(4, Strategy::branch_reuse, 3), dims, r);
        EXPECT_LT(reuse.total_flops, tree.total_flops);
        EXPECT_LT(tree.total_flops, naive.total_flops);
    }
}

TEST(Execute, IdentityFactorsReturnTensor) {
    Rng rng(401);
    const std::size_t n = 3;
    const DenseTensor x = random_tensor(Shape({n, n, n}), rng);
    std::vector<Matrix> eyes(3, Matrix::identity(n));
    FactorState state = FactorState::from_factors(eyes);
    const Schedule schedule = build_schedule(3, Strategy::dim_tree, 1);
    IntermediateCache cache;
    for (std::size_t mode : schedule.update_order(0)) {
        auto [y, cost] = execute(schedule, x, state, cache, 0, mode);
        EXPECT_LT(rel_fro_diff(y, x), 1e-15);
        // No factor update: identity stays current.
    }
}

TEST(Execute, BranchReuseFirstIterationMatchesOracle) {
    check_against_oracle(3, Strategy::branch_reuse, {9, 8, 7}, 3, 1, 4242);
}

TEST(Execute, AllStrategiesMatchOracleOverSixIterations) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        for (Strategy s : {Strategy::naive, Strategy::dim_tree, Strategy::branch_reuse}) {
            check_against_oracle(3, s, {9, 8, 7}, 3, 6, seed);
            check_against_oracle(4, s, {7, 6, 5, 4}, 3, 6, seed + 100);
        }
    }
}

TEST(Execute, CostsMatchDryRun) {
    Rng rng(911);
    const std::vector<std::size_t> dims = {6, 5, 4};
    const DenseTensor x = random_tensor(Shape(dims), rng);
    std::vector<Matrix> factors;
    for (std::size_t d : dims)
        factors.push_back(normalize_columns(random_matrix(d, 2, rng)).matrix);
    FactorState state = FactorState::from_factors(factors);
    const Schedule schedule = build_schedule(3, Strategy::branch_reuse, 3);
    IntermediateCache cache;
    CostReport live;
    for (std::size_t iter = 0; iter < 3; ++iter)
        for (std::size_t mode : schedule.update_order(iter)) {
            auto [y, cost] = execute(schedule, x, state, cache, iter, mode);
            live.merge(cost);
            state.update(mode, normalize_columns(random_matrix(dims[mode], 2, rng)).matrix);
        }
    const CostReport dry = measured_cost(schedule, dims, 2, 3);
    EXPECT_EQ(live.total_flops, dry.total_flops);
    EXPECT_EQ(live.root_ttm_count, dry.root_ttm_count);
}

TEST(Execute, StaleScheduleIsRejected) {
    // Update order (0,2,1): Y(0,1) is built before mode 2 is refreshed but
    // read afterwards; both the validator and the executor must object.
    using detail::step;
    ScheduleIteration it;
    it.updates = {
        ModeUpdate{0, {step(0b111, 2), step(0b011, 1)}},
        ModeUpdate{2, {step(0b111, 1), step(0b101, 0)}},
        ModeUpdate{1, {step(0b011, 0)}},
    };
    const Schedule bad(3, Strategy::dim_tree, {it}, 0, 1);
    EXPECT_THROW(detail::validate_schedule(bad), stale_intermediate_error);

    Rng rng(913);
    const std::vector<std::size_t> dims = {4, 4, 4};
    const DenseTensor x = random_tensor(Shape(dims), rng);
    std::vector<Matrix> factors;
    for (std::size_t d : dims)
        factors.push_back(normalize_columns(random_matrix(d, 2, rng)).matrix);
    FactorState state = FactorState::from_factors(factors);
    IntermediateCache cache;
    bool threw = false;
    for (std::size_t mode : bad.update_order(0)) {
        try {
            execute(bad, x, state, cache, 0, mode);
        } catch (const stale_intermediate_error&) {
            threw = true;
            break;
        }
        state.update(mode, normalize_columns(random_matrix(dims[mode], 2, rng)).matrix);
    }
    EXPECT_TRUE(threw);
}

TEST(Execute, MissingSourceIsRejected) {
    using detail::step;
    ScheduleIteration it;
    it.updates = {
        ModeUpdate{0, {step(0b011, 1)}},  // Y(0,1) never produced
        ModeUpdate{1, {step(0b111, 2), step(0b011, 0)}},
        ModeUpdate{2, {step(0b111, 1), step(0b101, 0)}},
    };
    const Schedule bad(3, Strategy::dim_tree, {it}, 0, 1);
    Rng rng(917);
    const std::vector<std::size_t> dims = {3, 3, 3};
    const DenseTensor x = random_tensor(Shape(dims), rng);
    std::vector<Matrix> factors(3, Matrix::identity(3));
    FactorState state = FactorState::from_factors(factors);
    IntermediateCache cache;
    EXPECT_THROW(execute(bad, x, state, cache, 0, 0), std::logic_error);
}

TEST(Execute, CacheStaysSmall) {
    Rng rng(919);
    const std::vector<std::size_t> dims = {6, 5, 4, 3};
    const DenseTensor x = random_tensor(Shape(dims), rng);
    std::vector<Matrix> factors;
    for (std::size_t d : dims)
        factors.push_back(normalize_columns(random_matrix(d, 2, rng)).matrix);
    FactorState state = FactorState::from_factors(factors);
    const Schedule schedule = build_schedule(4, Strategy::branch_reuse, 8);
    IntermediateCache cache;
    for (std::size_t iter = 0; iter < 8; ++iter) {
        for (std::size_t mode : schedule.update_order(iter)) {
            execute(schedule, x, state, cache, iter, mode);
            state.update(mode, normalize_columns(random_matrix(dims[mode], 2, rng)).matrix);
            EXPECT_LE(cache.size(), 4u);
        }
        EXPECT_LE(cache.size(), 2u);
    }
}

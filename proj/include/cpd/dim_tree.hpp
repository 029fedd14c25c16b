// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpd/factor_state.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

struct stale_intermediate_error : std::logic_error {
    using std::logic_error::logic_error;
};

enum class Strategy { naive, dim_tree, branch_reuse };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::naive: return "naive";
        case Strategy::dim_tree: return "dim-tree";
        case Strategy::branch_reuse: return "branch-reuse";
    }
    return "?";
}

/// Free-mode set of a partially contracted tensor, as a bitmask.
using ModeSet = std::uint32_t;

inline ModeSet full_set(std::size_t order) {
    return static_cast<ModeSet>((1u << order) - 1u);
}
inline ModeSet mode_bit(std::size_t mode) { return static_cast<ModeSet>(1u << mode); }

inline std::string mode_set_name(ModeSet set, std::size_t order) {
    std::string s = "Y(";
    bool first = true;
    for (std::size_t m = 0; m < order; ++m)
        if (set & mode_bit(m)) {
            if (!first) s += ',';
            s += std::to_string(m + 1);
            first = false;
        }
    return s + ")";
}

/// One TTM: contract `contract_mode` out of `source` (the full tensor when
/// source == full_set). Produces the intermediate with the remaining free
/// modes; a single-bit result is the final Y handed to the solver.
struct ContractionStep {
    ModeSet source;
    std::size_t contract_mode;
    ModeSet produces;
};

/// The steps that produce the final Y for one factor update; the last step
/// always yields the single-bit set of `mode`.
struct ModeUpdate {
    std::size_t mode;
    std::vector<ContractionStep> steps;
};

struct ScheduleIteration {
    std::vector<ModeUpdate> updates;
};

/// Fixed contraction plan for a whole run. Iterations repeat with period
/// `cycle_length` from `cycle_start` (0-based) onward; naive and dim-tree
/// plans repeat every iteration, branch-reuse plans carry intermediates
/// across iterations and cycle with period 2 (order 3) or 3 (order 4).
class Schedule {
public:
    Schedule(std::size_t order, Strategy strategy, std::vector<ScheduleIteration> iterations,
             std::size_t cycle_start, std::size_t cycle_length)
        : order_(order), strategy_(strategy), iterations_(std::move(iterations)),
          cycle_start_(cycle_start), cycle_length_(cycle_length) {}

    std::size_t order() const { return order_; }
    Strategy strategy() const { return strategy_; }
    std::size_t num_iterations() const { return iterations_.size(); }
    std::size_t cycle_start() const { return cycle_start_; }
    std::size_t cycle_length() const { return cycle_length_; }

    const ScheduleIteration& iteration(std::size_t i) const { return iterations_.at(i); }

    std::vector<std::size_t> update_order(std::size_t i) const {
        std::vector<std::size_t> order;
        for (const auto& u : iteration(i).updates) order.push_back(u.mode);
        return order;
    }

private:
    std::size_t order_;
    Strategy strategy_;
    std::vector<ScheduleIteration> iterations_;
    std::size_t cycle_start_;
    std::size_t cycle_length_;
};

/// Cached partially contracted tensors, stamped with the version of every
/// factor they absorbed. An entry may be read only while every stamped
/// version is still current.
class IntermediateCache {
public:
    struct Entry {
        DenseTensor tensor;
        std::map<std::size_t, std::uint64_t> stamps;
    };

    const Entry* find(ModeSet key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void put(ModeSet key, Entry entry) { entries_[key] = std::move(entry); }

    template <typename Pred>
    void evict_unless(Pred keep) {
        for (auto it = entries_.begin(); it != entries_.end();) {
            if (keep(it->first)) ++it;
            else it = entries_.erase(it);
        }
    }

    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<ModeSet, Entry> entries_;
};

/// TTM tally bucketed by symbolic cost: 2 * (product of the source's free
/// extents) * R^p, keyed by (free-mode set, R power).
struct CostReport {
    struct Bucket {
        std::uint64_t count = 0;
        std::uint64_t flops = 0;
    };
    std::map<std::pair<std::size_t, ModeSet>, Bucket> categories;  // key: (r_power, i_modes)
    std::uint64_t root_ttm_count = 0;
    std::uint64_t total_flops = 0;

    void add(ModeSet i_modes, std::size_t r_power, std::uint64_t flops, bool root) {
        auto& b = categories[{r_power, i_modes}];
        b.count += 1;
        b.flops += flops;
        total_flops += flops;
        if (root) root_ttm_count += 1;
    }

    void merge(const CostReport& other) {
        for (const auto& [key, b] : other.categories) {
            auto& mine = categories[key];
            mine.count += b.count;
            mine.flops += b.flops;
        }
        root_ttm_count += other.root_ttm_count;
        total_flops += other.total_flops;
    }

    static std::string category_label(std::pair<std::size_t, ModeSet> key, std::size_t order) {
        std::string s = "2";
        for (std::size_t m = 0; m < order; ++m)
            if (key.second & mode_bit(m)) s += "*I" + std::to_string(m + 1);
        if (key.first == 1) s += "*R";
        else s += "*R^" + std::to_string(key.first);
        return s;
    }
};

namespace detail {

// ---- normative per-iteration plans ----------------------------------------
//
// The plans below are fixed data. Dim-tree shares the two root contractions
// of each iteration across all mode updates; branch-reuse additionally
// carries the two intermediates left over at the end of an iteration into
// the next one, which drops the steady state to a single root contraction
// per iteration. Every plan is validated against the staleness rule at
// build time.

inline ModeUpdate make_update(std::size_t mode,
                              std::vector<ContractionStep> steps) {
    return ModeUpdate{mode, std::move(steps)};
}

inline ContractionStep step(ModeSet source, std::size_t contract) {
    return ContractionStep{source, contract,
                           static_cast<ModeSet>(source & ~mode_bit(contract))};
}

inline ModeSet bits(std::initializer_list<std::size_t> modes) {
    ModeSet s = 0;
    for (std::size_t m : modes) s |= mode_bit(m);
    return s;
}

/// Naive plan: every update runs the full multi-TTM from the root. The
/// inner contraction orders for orders 3 and 4 are pinned; other orders
/// contract in descending mode order.
inline std::vector<std::size_t> naive_contraction_order(std::size_t order, std::size_t mode) {
    if (order == 3) {
        static const std::size_t table[3][2] = {{2, 1}, {0, 2}, {1, 0}};
        return {table[mode][0], table[mode][1]};
    }
    if (order == 4) {
        static const std::size_t table[4][3] = {
            {3, 2, 1}, {3, 2, 0}, {0, 1, 3}, {0, 1, 2}};
        return {table[mode][0], table[mode][1], table[mode][2]};
    }
    std::vector<std::size_t> out;
    for (std::size_t k = order; k-- > 0;)
        if (k != mode) out.push_back(k);
    return out;
}

inline ScheduleIteration naive_iteration(std::size_t order) {
    ScheduleIteration it;
    for (std::size_t mode = 0; mode < order; ++mode) {
        std::vector<ContractionStep> steps;
        ModeSet cur = full_set(order);
        for (std::size_t c : naive_contraction_order(order, mode)) {
            steps.push_back(step(cur, c));
            cur = steps.back().produces;
        }
        it.updates.push_back(make_update(mode, std::move(steps)));
    }
    return it;
}

inline ScheduleIteration dim_tree_iteration(std::size_t order) {
    ScheduleIteration it;
    const ModeSet root = full_set(order);
    if (order == 3) {
        it.updates = {
            make_update(0, {step(root, 2), step(bits({0, 1}), 1)}),
            make_update(1, {step(bits({0, 1}), 0)}),
            make_update(2, {step(root, 1), step(bits({0, 2}), 0)}),
        };
    } else if (order == 4) {
        it.updates = {
            make_update(0, {step(root, 3), step(bits({0, 1, 2}), 2), step(bits({0, 1}), 1)}),
            make_update(1, {step(bits({0, 1}), 0)}),
            make_update(2, {step(bits({0, 1, 2}), 1), step(bits({0, 2}), 0)}),
            make_update(3, {step(root, 0), step(bits({1, 2, 3}), 1), step(bits({2, 3}), 2)}),
        };
    } else {
        throw std::invalid_argument("dim-tree schedules are defined for orders 3 and 4 only");
    }
    return it;
}

inline ScheduleIteration branch_reuse_iteration3_second() {
    // Order (0,2,1), reusing Y(0,2) from the previous iteration.
    ScheduleIteration it;
    const ModeSet root = full_set(3);
    it.updates = {
        make_update(0, {step(bits({0, 2}), 2)}),
        make_update(2, {step(bits({0, 2}), 0)}),
        make_update(1, {step(root, 0), step(bits({1, 2}), 2)}),
    };
    return it;
}

inline ScheduleIteration branch_reuse_iteration3_third() {
    // Order (1,2,0), reusing Y(1,2).
    ScheduleIteration it;
    const ModeSet root = full_set(3);
    it.updates = {
        make_update(1, {step(bits({1, 2}), 2)}),
        make_update(2, {step(bits({1, 2}), 1)}),
        make_update(0, {step(root, 1), step(bits({0, 2}), 2)}),
    };
    return it;
}

inline ScheduleIteration branch_reuse_iteration4_second() {
    // Order (2,3,1,0), reusing Y(2,3) and Y(1,2,3).
    ScheduleIteration it;
    const ModeSet root = full_set(4);
    it.updates = {
        make_update(2, {step(bits({2, 3}), 3)}),
        make_update(3, {step(bits({2, 3}), 2)}),
        make_update(1, {step(bits({1, 2, 3}), 2), step(bits({1, 3}), 3)}),
        make_update(0, {step(root, 1), step(bits({0, 2, 3}), 2), step(bits({0, 3}), 3)}),
    };
    return it;
}

inline ScheduleIteration branch_reuse_iteration4_third() {
    // Order (0,2,3,1), reusing Y(0,3) and Y(0,2,3).
    ScheduleIteration it;
    const ModeSet root = full_set(4);
    it.updates = {
        make_update(0, {step(bits({0, 3}), 3)}),
        make_update(2, {step(bits({0, 2, 3}), 3), step(bits({0, 2}), 0)}),
        make_update(3, {step(bits({0, 2, 3}), 2), step(bits({0, 3}), 0)}),
        make_update(1, {step(root, 2), step(bits({0, 1, 3}), 0), step(bits({1, 3}), 3)}),
    };
    return it;
}

inline ModeSet permute_set(ModeSet set, const std::vector<std::size_t>& perm) {
    ModeSet out = 0;
    for (std::size_t m = 0; m < perm.size(); ++m)
        if (set & mode_bit(m)) out |= mode_bit(perm[m]);
    return out;
}

inline ScheduleIteration permute_iteration(const ScheduleIteration& it,
                                           const std::vector<std::size_t>& perm) {
    ScheduleIteration out;
    for (const auto& u : it.updates) {
        ModeUpdate nu;
        nu.mode = perm[u.mode];
        for (const auto& s : u.steps)
            nu.steps.push_back({permute_set(s.source, perm), perm[s.contract_mode],
                                permute_set(s.produces, perm)});
        out.updates.push_back(std::move(nu));
    }
    return out;
}

/// Structural checks plus a version simulation: every cached read must see
/// only current factor versions. Throws when a plan violates freshness.
inline void validate_schedule(const Schedule& schedule) {
    const std::size_t order = schedule.order();
    const ModeSet root = full_set(order);
    std::vector<std::uint64_t> version(order, 1);
    std::map<ModeSet, std::map<std::size_t, std::uint64_t>> stamps;

    for (std::size_t i = 0; i < schedule.num_iterations(); ++i) {
        const auto& it = schedule.iteration(i);
        if (it.updates.size() != order)
            throw std::logic_error("schedule: iteration must update every mode exactly once");
        std::vector<bool> seen(order, false);
        for (const auto& u : it.updates) {
            if (u.mode >= order || seen[u.mode])
                throw std::logic_error("schedule: duplicate or out-of-range update mode");
            seen[u.mode] = true;
            if (u.steps.empty() || u.steps.back().produces != mode_bit(u.mode))
                throw std::logic_error("schedule: update must end in its final tensor");
            for (const auto& s : u.steps) {
                if (!(s.source & mode_bit(s.contract_mode)))
                    throw std::logic_error("schedule: contract mode not free in source");
                if (s.produces != (s.source & ~mode_bit(s.contract_mode)))
                    throw std::logic_error("schedule: produced set must drop the contracted mode");
                std::map<std::size_t, std::uint64_t> src_stamps;
                if (s.source != root) {
                    auto found = stamps.find(s.source);
                    if (found == stamps.end())
                        throw std::logic_error("schedule: source " +
                                               mode_set_name(s.source, order) +
                                               " not available at iteration " +
                                               std::to_string(i + 1));
                    for (const auto& [m, v] : found->second)
                        if (v != version[m])
                            throw stale_intermediate_error(
                                "schedule: stale source " + mode_set_name(s.source, order) +
                                " at iteration " + std::to_string(i + 1) + ", update of mode " +
                                std::to_string(u.mode + 1));
                    src_stamps = found->second;
                }
                src_stamps[s.contract_mode] = version[s.contract_mode];
                if (s.produces != mode_bit(u.mode)) stamps[s.produces] = src_stamps;
            }
            ++version[u.mode];
        }
    }
}

}  // namespace detail

/// Build the contraction plan for `num_iterations` sweeps. Orders 3 and 4
/// are supported for the tree strategies; the naive strategy accepts any
/// order >= 2.
inline Schedule build_schedule(std::size_t order, Strategy strategy,
                               std::size_t num_iterations) {
    if (num_iterations == 0)
        throw std::invalid_argument("build_schedule: need at least one iteration");
    if (order < 2) throw std::invalid_argument("build_schedule: order must be >= 2");
    if (strategy != Strategy::naive && order != 3 && order != 4)
        throw std::invalid_argument(
            "build_schedule: tree strategies are defined for orders 3 and 4 only");
    if (order >= 32) throw std::invalid_argument("build_schedule: order too large");

    std::vector<ScheduleIteration> iters;
    std::size_t cycle_start = 0, cycle_length = 1;
    if (strategy == Strategy::naive) {
        const ScheduleIteration it = detail::naive_iteration(order);
        iters.assign(num_iterations, it);
    } else if (strategy == Strategy::dim_tree) {
        const ScheduleIteration it = detail::dim_tree_iteration(order);
        iters.assign(num_iterations, it);
    } else if (order == 3) {
        cycle_start = 1;
        cycle_length = 2;
        iters.push_back(detail::dim_tree_iteration(3));
        if (num_iterations > 1) iters.push_back(detail::branch_reuse_iteration3_second());
        if (num_iterations > 2) iters.push_back(detail::branch_reuse_iteration3_third());
        for (std::size_t i = 3; i < num_iterations; ++i) iters.push_back(iters[i - 2]);
    } else {
        cycle_start = 2;
        cycle_length = 3;
        iters.push_back(detail::dim_tree_iteration(4));
        if (num_iterations > 1) iters.push_back(detail::branch_reuse_iteration4_second());
        if (num_iterations > 2) iters.push_back(detail::branch_reuse_iteration4_third());
        // Later iterations rotate the third pattern through the 3-cycle
        // permutation 0->1->2->0 (mode 3 stays in the reused pair).
        const std::vector<std::size_t> sigma = {1, 2, 0, 3};
        for (std::size_t i = 3; i < num_iterations; ++i)
            iters.push_back(detail::permute_iteration(iters[i - 1], sigma));
    }
    Schedule schedule(order, strategy, std::move(iters), cycle_start, cycle_length);
    detail::validate_schedule(schedule);
    return schedule;
}

namespace detail {

/// Keys still needed after `block` of iteration `iter` finishes: a key is
/// needed if some later step reads it before a later step overwrites it.
/// Looks ahead through the following iteration (or its cyclic image).
inline std::vector<ModeSet> retained_keys(const Schedule& schedule, std::size_t iter,
                                          std::size_t block) {
    std::vector<const ScheduleIteration*> horizon;
    horizon.push_back(&schedule.iteration(iter));
    std::size_t next = iter + 1;
    if (next >= schedule.num_iterations()) {
        if (next > schedule.cycle_start())
            next = schedule.cycle_start() +
                   (next - schedule.cycle_start()) % schedule.cycle_length();
        if (next >= schedule.num_iterations()) next = schedule.num_iterations() - 1;
    }
    horizon.push_back(&schedule.iteration(next));

    std::vector<ModeSet> needed;
    std::vector<ModeSet> overwritten;
    auto is_overwritten = [&](ModeSet k) {
        for (ModeSet o : overwritten)
            if (o == k) return true;
        return false;
    };
    const ModeSet root = full_set(schedule.order());
    for (std::size_t h = 0; h < horizon.size(); ++h) {
        const auto& updates = horizon[h]->updates;
        for (std::size_t b = 0; b < updates.size(); ++b) {
            if (h == 0 && b <= block) continue;
            for (const auto& s : updates[b].steps) {
                if (s.source != root && !is_overwritten(s.source)) needed.push_back(s.source);
                overwritten.push_back(s.produces);
            }
        }
    }
    return needed;
}

}  // namespace detail

/// Run the scheduled contractions for one factor update. Reads and writes
/// the cache, verifies the freshness of every cached source against the
/// current factor versions (always on), and returns the final Y together
/// with the TTM cost incurred.
inline std::pair<DenseTensor, CostReport> execute(const Schedule& schedule,
                                                  const DenseTensor& x,
                                                  const FactorState& state,
                                                  IntermediateCache& cache,
                                                  std::size_t iteration, std::size_t mode) {
    const std::size_t order = schedule.order();
    if (x.order() != order || state.order() != order)
        throw std::invalid_argument("execute: order mismatch");
    const ScheduleIteration& it = schedule.iteration(iteration);
    const ModeUpdate* update = nullptr;
    std::size_t block = 0;
    for (std::size_t b = 0; b < it.updates.size(); ++b)
        if (it.updates[b].mode == mode) {
            update = &it.updates[b];
            block = b;
            break;
        }
    if (update == nullptr) throw std::invalid_argument("execute: mode not in iteration");

    const ModeSet root = full_set(order);
    CostReport cost;
    std::optional<DenseTensor> result;

    for (const auto& s : update->steps) {
        const DenseTensor* src = nullptr;
        std::map<std::size_t, std::uint64_t> stamp;
        if (s.source == root) {
            src = &x;
        } else {
            const auto* entry = cache.find(s.source);
            if (entry == nullptr)
                throw std::logic_error("execute: scheduled source " +
                                       mode_set_name(s.source, order) + " missing from cache");
            for (const auto& [m, v] : entry->stamps)
                if (v != state.version(m))
                    throw stale_intermediate_error(
                        "execute: stale intermediate " + mode_set_name(s.source, order) +
                        " (mode " + std::to_string(m + 1) + " stamped v" + std::to_string(v) +
                        ", current v" + std::to_string(state.version(m)) + ") at iteration " +
                        std::to_string(iteration + 1) + ", update of mode " +
                        std::to_string(mode + 1));
            src = &entry->tensor;
            stamp = entry->stamps;
        }

        const std::size_t c = s.contract_mode;
        const Matrix qt = transpose(state.q(c));
        const std::uint64_t contracted_extent = src->shape().extent(c);
        DenseTensor produced = ttm(*src, qt, c);

        const std::uint64_t flops =
            2ull * static_cast<std::uint64_t>(produced.size()) * contracted_extent;
        const std::size_t r_power = order - static_cast<std::size_t>(std::popcount(s.source)) + 1;
        cost.add(s.source, r_power, flops, s.source == root);

        stamp[c] = state.version(c);
        if (s.produces == mode_bit(mode)) {
            result = std::move(produced);
        } else {
            cache.put(s.produces, {std::move(produced), std::move(stamp)});
        }
    }

    const auto keep = detail::retained_keys(schedule, iteration, block);
    cache.evict_unless([&](ModeSet k) {
        for (ModeSet n : keep)
            if (n == k) return true;
        return false;
    });

    return {std::move(*result), std::move(cost)};
}

/// Dry-run accounting: walks the plan tracking extents only. Root-TTM
/// counts over the first three iterations are 9/6/4 (order 3) and 12/6/4
/// (order 4) for naive / dim-tree / branch-reuse.
inline CostReport measured_cost(const Schedule& schedule, const std::vector<std::size_t>& dims,
                                std::size_t rank, std::size_t iterations = 3) {
    if (dims.size() != schedule.order())
        throw std::invalid_argument("measured_cost: dims do not match schedule order");
    const std::size_t order = schedule.order();
    const ModeSet root = full_set(order);
    CostReport cost;
    for (std::size_t i = 0; i < iterations && i < schedule.num_iterations(); ++i) {
        for (const auto& u : schedule.iteration(i).updates) {
            for (const auto& s : u.steps) {
                std::uint64_t flops = 2;
                for (std::size_t m = 0; m < order; ++m)
                    if (s.source & mode_bit(m)) flops *= dims[m];
                const std::size_t r_power =
                    order - static_cast<std::size_t>(std::popcount(s.source)) + 1;
                for (std::size_t p = 0; p < r_power; ++p) flops *= rank;
                cost.add(s.source, r_power, flops, s.source == root);
            }
        }
    }
    return cost;
}

/// Closed-form total TTM flops over the first three iterations. For order 3
/// the three strategy totals are
///   naive:        18*I1*I2*I3*R + 6*I1*I2*R^2 + 6*I2*I3*R^2 + 6*I1*I3*R^2
///   dim-tree:     12*I1*I2*I3*R + 12*I1*I2*R^2 + 6*I1*I3*R^2
///   branch-reuse:  8*I1*I2*I3*R + 4*I1*I2*R^2 + 8*I1*I3*R^2 + 6*I2*I3*R^2
/// and the order-4 totals follow the same per-plan tallies. Every total
/// matches measured_cost of the corresponding plan exactly.
inline std::uint64_t closed_form_cost(std::size_t order, Strategy strategy,
                                      const std::vector<std::size_t>& dims, std::size_t rank) {
    if (order != 3 && order != 4)
        throw std::invalid_argument("closed_form_cost: order must be 3 or 4");
    if (dims.size() != order)
        throw std::invalid_argument("closed_form_cost: dims do not match order");
    const std::uint64_t R = rank;
    auto term = [&](std::uint64_t coeff, std::initializer_list<std::size_t> modes,
                    std::size_t r_power) {
        std::uint64_t t = coeff;
        for (std::size_t m : modes) t *= dims[m];
        for (std::size_t p = 0; p < r_power; ++p) t *= R;
        return t;
    };
    if (order == 3) {
        switch (strategy) {
            case Strategy::naive:
                return term(18, {0, 1, 2}, 1) + term(6, {0, 1}, 2) + term(6, {1, 2}, 2) +
                       term(6, {0, 2}, 2);
            case Strategy::dim_tree:
                return term(12, {0, 1, 2}, 1) + term(12, {0, 1}, 2) + term(6, {0, 2}, 2);
            case Strategy::branch_reuse:
                return term(8, {0, 1, 2}, 1) + term(4, {0, 1}, 2) + term(8, {0, 2}, 2) +
                       term(6, {1, 2}, 2);
        }
    } else {
        switch (strategy) {
            case Strategy::naive:
                return term(24, {0, 1, 2, 3}, 1) + term(12, {0, 1, 2}, 2) +
                       term(12, {1, 2, 3}, 2) + term(12, {0, 1}, 3) + term(12, {2, 3}, 3);
            case Strategy::dim_tree:
                return term(12, {0, 1, 2, 3}, 1) + term(12, {0, 1, 2}, 2) +
                       term(6, {1, 2, 3}, 2) + term(12, {0, 1}, 3) + term(6, {0, 2}, 3) +
                       term(6, {2, 3}, 3);
            case Strategy::branch_reuse:
                return term(8, {0, 1, 2, 3}, 1) + term(4, {0, 1, 2}, 2) +
                       term(4, {1, 2, 3}, 2) + term(6, {0, 2, 3}, 2) + term(2, {0, 1, 3}, 2) +
                       term(4, {0, 1}, 3) + term(4, {0, 2}, 3) + term(6, {2, 3}, 3) +
                       term(6, {0, 3}, 3) + term(4, {1, 3}, 3);
        }
    }
    throw std::invalid_argument("closed_form_cost: unknown strategy");
}

/// Coefficient of the leading (prod I_k)*R term over the first three
/// iterations: 18/12/8 for order 3 and 24/12/8 for order 4.
inline std::uint64_t leading_flop_coefficient(std::size_t order, Strategy strategy) {
    if (order != 3 && order != 4)
        throw std::invalid_argument("leading_flop_coefficient: order must be 3 or 4");
    switch (strategy) {
        case Strategy::naive: return order == 3 ? 18 : 24;
        case Strategy::dim_tree: return 12;
        case Strategy::branch_reuse: return 8;
    }
    throw std::invalid_argument("leading_flop_coefficient: unknown strategy");
}

}  // namespace cpd

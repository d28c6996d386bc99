#pragma once

// Temporal rank pooling: compress a sequence of binary voxel grids into one
// motion-valued grid. Two routes:
//   pool_exact  — RankSVM objective over running averages, solved by
//                 accept/reject subgradient descent;
//   pool_approx — closed-form harmonic coefficients applied to raw
//                 occupancies (the fast default).
// Plus the overlapping temporal-split schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/voxel.hpp"

namespace dv3 {

struct MotionGrid {
    GridSpec spec;
    // (voxel key, motion value), sorted by key. A voxel occupied in no frame
    // has no entry; entries may hold 0.
    std::vector<std::pair<VoxelKey, double>> motion;

    std::size_t size() const { return motion.size(); }

    const double* find(VoxelKey key) const {
        auto it = std::lower_bound(motion.begin(), motion.end(), key,
                                   [](const auto& e, VoxelKey k) { return e.first < k; });
        return (it != motion.end() && it->first == key) ? &it->second : nullptr;
    }
};

struct RankPoolConfig {
    double lambda = 1.0;      // regularizer weight
    int max_iters = 500;
    double step_size = 0.1;   // initial learning rate
    double tol = 1e-7;        // convergence tolerance on the objective
    bool record_objective = false;
};

struct ExactPoolResult {
    MotionGrid grid;
    bool converged = true;
    // Objective value after each accepted step (only when requested).
    std::vector<double> objective_trace;
};

struct SplitPlan {
    std::vector<std::pair<int, int>> ranges;  // half-open [start, end)
};

namespace detail {

inline void require_shared_spec(std::span<const VoxelGrid> grids) {
    if (grids.empty()) throw Error("rank pooling: no grids");
    for (std::size_t i = 1; i < grids.size(); ++i)
        if (!(grids[i].spec == grids[0].spec)) throw Error("mismatched specs");
}

// Grids keep their keys sorted, so unions and per-frame lookups are linear
// merges rather than sorts and binary searches.
inline std::vector<VoxelKey> union_keys(std::span<const VoxelGrid> grids) {
    std::vector<VoxelKey> keys, merged;
    for (const auto& g : grids) {
        if (g.occupied.empty()) continue;
        merged.clear();
        merged.reserve(keys.size() + g.occupied.size());
        std::set_union(keys.begin(), keys.end(), g.occupied.begin(), g.occupied.end(),
                       std::back_inserter(merged));
        keys.swap(merged);
    }
    return keys;
}

// Walks a frame's sorted keys against the union key set, invoking fn with
// each key's union position.
template <typename Fn>
void for_each_key_position(const std::vector<VoxelKey>& keys,
                           const std::vector<VoxelKey>& frame_keys, Fn&& fn) {
    std::size_t pos = 0;
    for (VoxelKey k : frame_keys) {
        while (keys[pos] < k) ++pos;
        fn(pos);
    }
}

inline std::size_t key_position(const std::vector<VoxelKey>& keys, VoxelKey key) {
    return static_cast<std::size_t>(
        std::lower_bound(keys.begin(), keys.end(), key) - keys.begin());
}

// Per-frame prefix occupancy counts over the union key set; counts[t][i] is
// the number of frames among 1..t+1 in which voxel i was occupied.
inline std::vector<std::vector<std::uint32_t>> prefix_counts(
    std::span<const VoxelGrid> grids, const std::vector<VoxelKey>& keys) {
    const std::size_t T = grids.size(), n = keys.size();
    std::vector<std::vector<std::uint32_t>> counts(T, std::vector<std::uint32_t>(n, 0));
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) counts[t] = counts[t - 1];
        auto& row = counts[t];
        for_each_key_position(keys, grids[t].occupied, [&](std::size_t pos) { row[pos]++; });
    }
    return counts;
}

}  // namespace detail

// Element t holds, per voxel of the union lattice, the mean binary occupancy
// over frames 1..t+1.
inline std::vector<MotionGrid> running_averages(std::span<const VoxelGrid> grids) {
    detail::require_shared_spec(grids);
    const auto keys = detail::union_keys(grids);
    const auto counts = detail::prefix_counts(grids, keys);

    std::vector<MotionGrid> out(grids.size());
    for (std::size_t t = 0; t < grids.size(); ++t) {
        out[t].spec = grids[0].spec;
        out[t].motion.reserve(keys.size());
        const double inv = 1.0 / static_cast<double>(t + 1);
        for (std::size_t i = 0; i < keys.size(); ++i)
            out[t].motion.emplace_back(keys[i], counts[t][i] * inv);
    }
    return out;
}

// Harmonic-number closed form: alpha_t = 2(T - t + 1) - (T + 1)(H_T - H_{t-1}),
// t = 1..T. Coefficients sum to zero exactly.
inline std::vector<double> approx_coeffs(int T) {
    if (T < 1) throw Error("rank pooling: T must be >= 1");
    std::vector<double> harmonic(static_cast<std::size_t>(T) + 1, 0.0);
    for (int j = 1; j <= T; ++j) harmonic[j] = harmonic[j - 1] + 1.0 / j;
    std::vector<double> alpha(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t)
        alpha[t - 1] = 2.0 * (T - t + 1) - (T + 1) * (harmonic[T] - harmonic[t - 1]);
    return alpha;
}

// motion(v) = sum_t alpha_t * occ_t(v) over raw binary occupancies.
// The coefficients sum to zero analytically but not bit-exactly; sums within
// accumulated rounding noise snap to exact zero so always-occupied voxels
// carry motion 0 (and later drop out of the point abstraction).
inline MotionGrid pool_approx(std::span<const VoxelGrid> grids) {
    detail::require_shared_spec(grids);
    const auto keys = detail::union_keys(grids);
    const auto alpha = approx_coeffs(static_cast<int>(grids.size()));

    double alpha_abs_sum = 0.0;
    for (double a : alpha) alpha_abs_sum += std::abs(a);
    const double noise_floor = 32.0 * 2.220446049250313e-16 * alpha_abs_sum;

    std::vector<double> motion(keys.size(), 0.0);
    for (std::size_t t = 0; t < grids.size(); ++t)
        detail::for_each_key_position(keys, grids[t].occupied,
                                      [&](std::size_t pos) { motion[pos] += alpha[t]; });

    MotionGrid out;
    out.spec = grids[0].spec;
    out.motion.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
        out.motion.emplace_back(keys[i], std::abs(motion[i]) <= noise_floor ? 0.0 : motion[i]);
    return out;
}

// RankSVM pooling: minimizes
//   (lambda/2) ||w||^2 + (2 / (T(T-1))) sum_{q>t} max(0, 1 - S(q|w) + S(t|w)),
// where S(t|w) = <w, running average till t>. Steps that raise the objective
// are rejected and halve the step size, so the objective is non-increasing
// across accepted steps. Non-convergence is reported via the flag, not an
// error.
inline ExactPoolResult pool_exact(std::span<const VoxelGrid> grids,
                                  const RankPoolConfig& cfg = {}) {
    detail::require_shared_spec(grids);
    if (cfg.lambda < 0 || cfg.max_iters < 1) throw Error("rank pooling: bad config");

    const int T = static_cast<int>(grids.size());
    const auto keys = detail::union_keys(grids);
    const std::size_t n = keys.size();

    ExactPoolResult result;
    result.grid.spec = grids[0].spec;

    if (T == 1 || n == 0) {
        // No ranking pairs; the regularizer forces w = 0.
        result.grid.motion.reserve(n);
        for (VoxelKey k : keys) result.grid.motion.emplace_back(k, 0.0);
        return result;
    }

    const auto counts = detail::prefix_counts(grids, keys);
    // avg[t][i] = counts[t][i] / (t+1)
    std::vector<std::vector<double>> avg(T, std::vector<double>(n));
    for (int t = 0; t < T; ++t) {
        const double inv = 1.0 / (t + 1);
        for (std::size_t i = 0; i < n; ++i) avg[t][i] = counts[t][i] * inv;
    }

    const double pair_norm = 2.0 / (static_cast<double>(T) * (T - 1));

    std::vector<double> scores(T);
    auto compute_scores = [&](const std::vector<double>& w) {
        for (int t = 0; t < T; ++t) {
            double s = 0.0;
            const auto& a = avg[t];
            for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i];
            scores[t] = s;
        }
    };

    auto objective = [&](const std::vector<double>& w) {
        compute_scores(w);
        double hinge = 0.0;
        for (int t = 0; t < T; ++t)
            for (int q = t + 1; q < T; ++q)
                hinge += std::max(0.0, 1.0 - scores[q] + scores[t]);
        double reg = 0.0;
        for (double x : w) reg += x * x;
        return 0.5 * cfg.lambda * reg + pair_norm * hinge;
    };

    std::vector<double> w(n, 0.0), grad(n), candidate(n);
    std::vector<double> pair_coeff(T);
    double step = cfg.step_size;
    double current = objective(w);
    if (cfg.record_objective) result.objective_trace.push_back(current);
    result.converged = false;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        // Subgradient: lambda w + pair_norm * sum_t c_t avg_t, where c_t
        // counts violated pairs in which frame t is the earlier (+1) or the
        // later (-1) member.
        compute_scores(w);
        std::fill(pair_coeff.begin(), pair_coeff.end(), 0.0);
        for (int t = 0; t < T; ++t) {
            for (int q = t + 1; q < T; ++q) {
                if (1.0 - scores[q] + scores[t] > 0.0) {
                    pair_coeff[t] += 1.0;
                    pair_coeff[q] -= 1.0;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) grad[i] = cfg.lambda * w[i];
        for (int t = 0; t < T; ++t) {
            if (pair_coeff[t] == 0.0) continue;
            const double c = pair_norm * pair_coeff[t];
            const auto& a = avg[t];
            for (std::size_t i = 0; i < n; ++i) grad[i] += c * a[i];
        }

        for (std::size_t i = 0; i < n; ++i) candidate[i] = w[i] - step * grad[i];
        double next = objective(candidate);
        if (next <= current) {
            w.swap(candidate);
            if (cfg.record_objective) result.objective_trace.push_back(next);
            if (current - next <= cfg.tol * std::max(1.0, std::abs(current))) {
                current = next;
                result.converged = true;
                break;
            }
            current = next;
        } else {
            step *= 0.5;  // rejected step
        }
        if ((iter + 1) % 50 == 0) step *= 0.95;
    }

    result.grid.motion.reserve(n);
    for (std::size_t i = 0; i < n; ++i) result.grid.motion.emplace_back(keys[i], w[i]);
    return result;
}

// Overlapping temporal splits: length L = round(2T / (n + 1)), stride L/2,
// last end forced to T so the ranges cover [0, T).
inline SplitPlan plan_splits(int T, int n_splits) {
    if (T < 1 || n_splits < 1) throw Error("plan_splits: T and n_splits must be >= 1");
    if (T < n_splits) throw Error("too few frames");

    SplitPlan plan;
    if (n_splits == 1) {
        plan.ranges.emplace_back(0, T);
        return plan;
    }
    int length = static_cast<int>(std::floor(2.0 * T / (n_splits + 1) + 0.5));
    length = std::max(1, std::min(length, T));
    int stride = std::max(1, length / 2);
    for (int s = 0; s < n_splits; ++s) {
        int start = std::min(s * stride, T - 1);
        int end = (s == n_splits - 1) ? T : std::min(start + length, T);
        plan.ranges.emplace_back(start, end);
    }
    return plan;
}

}  // namespace dv3

#pragma once

// Point-set geometric primitives: farthest point sampling, ball query and
// grouping. All deterministic — greedy ties break toward the smallest index,
// ball neighbors come back in ascending index order — so brute-force oracles
// can demand exact equality.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dv3/common.hpp"

namespace dv3 {

struct GroupSpec {
    int n_centroids = 1;
    double radius = 0.1;    // normalized units
    int max_neighbors = 1;  // K
};

namespace geom {

template <typename Real>
Real squared_distance(std::span<const Real> xyz, int i, int j) {
    const Real dx = xyz[3 * i] - xyz[3 * j];
    const Real dy = xyz[3 * i + 1] - xyz[3 * j + 1];
    const Real dz = xyz[3 * i + 2] - xyz[3 * j + 2];
    return dx * dx + dy * dy + dz * dz;
}

// Greedy farthest point sampling. first = start; each next point is the
// unselected index maximizing the minimum distance to the selected set,
// ties breaking toward the smaller index.
template <typename Real>
std::vector<int> farthest_point_sample(std::span<const Real> xyz, int k, int start = 0) {
    const int n = static_cast<int>(xyz.size() / 3);
    if (k < 1 || k > n) throw Error("farthest_point_sample: k out of range");
    if (start < 0 || start >= n) throw Error("farthest_point_sample: start out of range");

    std::vector<int> selected;
    selected.reserve(k);
    std::vector<Real> min_dist(n, std::numeric_limits<Real>::infinity());
    std::vector<bool> taken(n, false);

    int current = start;
    for (int s = 0; s < k; ++s) {
        selected.push_back(current);
        taken[current] = true;
        if (s + 1 == k) break;
        int next = -1;
        Real best = -1;
        for (int i = 0; i < n; ++i) {
            Real d = squared_distance(xyz, i, current);
            if (d < min_dist[i]) min_dist[i] = d;
            if (!taken[i] && min_dist[i] > best) {  // strict: ties keep the smaller index
                best = min_dist[i];
                next = i;
            }
        }
        current = next;
    }
    return selected;
}

// Indices within the closed ball around `center` (a point index), ascending,
// truncated to the first K.
template <typename Real>
std::vector<int> ball_query(std::span<const Real> xyz, int center, Real radius, int max_neighbors) {
    if (!(radius > 0)) throw Error("ball_query: radius must be positive");
    const int n = static_cast<int>(xyz.size() / 3);
    const Real r2 = radius * radius;
    std::vector<int> out;
    for (int i = 0; i < n && static_cast<int>(out.size()) < max_neighbors; ++i)
        if (squared_distance(xyz, i, center) <= r2) out.push_back(i);
    return out;
}

// Grouped neighborhoods for a set of centroids. Each centroid yields exactly
// K member indices: its ball neighbors, padded by repeating the first
// neighbor, or -1 slots when the ball is empty (callers substitute the
// centroid with zero features).
template <typename Real>
std::vector<int> group_indices(std::span<const Real> xyz, std::span<const int> centroids,
                               const GroupSpec& spec) {
    std::vector<int> members(centroids.size() * static_cast<std::size_t>(spec.max_neighbors));
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        auto nbrs = ball_query(xyz, centroids[c], static_cast<Real>(spec.radius),
                               spec.max_neighbors);
        int* row = members.data() + c * spec.max_neighbors;
        for (int j = 0; j < spec.max_neighbors; ++j) {
            if (!nbrs.empty())
                row[j] = j < static_cast<int>(nbrs.size()) ? nbrs[j] : nbrs.front();
            else
                row[j] = -1;
        }
    }
    return members;
}

// Materializes grouped rows (coords - centroid coords, features). A -1
// member index produces a zero row.
template <typename Real>
std::vector<Real> group_rows(std::span<const Real> xyz, std::span<const Real> features,
                             int feature_dim, std::span<const int> centroids,
                             std::span<const int> members, int max_neighbors) {
    const int row_width = 3 + feature_dim;
    std::vector<Real> rows(centroids.size() * static_cast<std::size_t>(max_neighbors) * row_width,
                           Real(0));
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const int ci = centroids[c];
        for (int j = 0; j < max_neighbors; ++j) {
            const int m = members[c * max_neighbors + j];
            if (m < 0) continue;
            Real* row = rows.data() + (c * max_neighbors + j) * row_width;
            for (int a = 0; a < 3; ++a) row[a] = xyz[3 * m + a] - xyz[3 * ci + a];
            for (int f = 0; f < feature_dim; ++f)
                row[3 + f] = features[static_cast<std::size_t>(m) * feature_dim + f];
        }
    }
    return rows;
}

}  // namespace geom
}  // namespace dv3

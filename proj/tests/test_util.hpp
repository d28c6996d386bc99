#pragma once

// Shared test helpers: scratch directories, rank correlation, and
// brute-force geometry oracles kept independent of the library
// implementations they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace testutil {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("dv3_test_" + tag + "_" + std::to_string(counter_++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::filesystem::path path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

// Spearman rank correlation with average ranks for ties.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0 || vb == 0) return 0.0;
    return cov / std::sqrt(va * vb);
}

// Brute-force greedy farthest point sampling: recomputes every min-distance
// from scratch each round over the not-yet-selected indices. Ties break
// toward the smallest index, matching the library contract.
template <typename Real>
std::vector<int> fps_oracle(const std::vector<Real>& xyz, int k, int start) {
    const int n = static_cast<int>(xyz.size() / 3);
    std::vector<int> selected{start};
    while (static_cast<int>(selected.size()) < k) {
        int best_idx = -1;
        Real best_dist = -1;
        for (int i = 0; i < n; ++i) {
            if (std::find(selected.begin(), selected.end(), i) != selected.end()) continue;
            Real min_d = std::numeric_limits<Real>::infinity();
            for (int s : selected) {
                const Real dx = xyz[3 * i] - xyz[3 * s];
                const Real dy = xyz[3 * i + 1] - xyz[3 * s + 1];
                const Real dz = xyz[3 * i + 2] - xyz[3 * s + 2];
                const Real d = dx * dx + dy * dy + dz * dz;
                if (d < min_d) min_d = d;
            }
            if (min_d > best_dist) {
                best_dist = min_d;
                best_idx = i;
            }
        }
        selected.push_back(best_idx);
    }
    return selected;
}

// Exhaustive closed-ball scan in ascending index order, capped at K.
template <typename Real>
std::vector<int> ball_oracle(const std::vector<Real>& xyz, int center, Real radius, int k) {
    const int n = static_cast<int>(xyz.size() / 3);
    std::vector<int> out;
    for (int i = 0; i < n && static_cast<int>(out.size()) < k; ++i) {
        const Real dx = xyz[3 * i] - xyz[3 * center];
        const Real dy = xyz[3 * i + 1] - xyz[3 * center + 1];
        const Real dz = xyz[3 * i + 2] - xyz[3 * center + 2];
        if (dx * dx + dy * dy + dz * dz <= radius * radius) out.push_back(i);
    }
    return out;
}

}  // namespace testutil

#pragma once

// Binary occupancy voxelization over a video-wide lattice. Occupancy is
// binary regardless of how many points land in a cell, which makes the
// representation robust to point density variation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/depth_io.hpp"

namespace dv3 {

struct GridSpec {
    Vec3d origin{};                  // mm, componentwise minimum corner
    std::array<int, 3> dims{0, 0, 0};
    double voxel_size_mm = 35.0;

    std::int64_t cell_count() const {
        return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    }

    bool operator==(const GridSpec& o) const {
        return origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z &&
               dims == o.dims && voxel_size_mm == o.voxel_size_mm;
    }
};

// Voxel indices packed 21 bits per axis; dims are far below 2^21 in practice.
using VoxelKey = std::uint64_t;

inline VoxelKey pack_voxel(int x, int y, int z) {
    return static_cast<VoxelKey>(x) | (static_cast<VoxelKey>(y) << 21) |
           (static_cast<VoxelKey>(z) << 42);
}

inline std::array<int, 3> unpack_voxel(VoxelKey key) {
    constexpr VoxelKey mask = (1ULL << 21) - 1;
    return {static_cast<int>(key & mask), static_cast<int>((key >> 21) & mask),
            static_cast<int>((key >> 42) & mask)};
}

struct VoxelGrid {
    GridSpec spec;
    std::vector<VoxelKey> occupied;  // sorted, unique

    bool contains(VoxelKey key) const {
        return std::binary_search(occupied.begin(), occupied.end(), key);
    }
    std::size_t size() const { return occupied.size(); }
};

// Shared lattice over the union bounding box of all clouds.
// dims = ceil((max - min) / voxel_size), at least 1 per axis.
inline GridSpec fit_grid(std::span<const PointCloud> clouds, double voxel_size_mm = 35.0) {
    if (!(voxel_size_mm > 0)) throw Error("voxel size must be positive");
    bool any = false;
    Vec3d lo{0, 0, 0}, hi{0, 0, 0};
    for (const auto& cloud : clouds) {
        for (const Vec3f& p : cloud.points) {
            if (!any) {
                lo = hi = {p.x, p.y, p.z};
                any = true;
                continue;
            }
            lo.x = std::min<double>(lo.x, p.x);
            lo.y = std::min<double>(lo.y, p.y);
            lo.z = std::min<double>(lo.z, p.z);
            hi.x = std::max<double>(hi.x, p.x);
            hi.y = std::max<double>(hi.y, p.y);
            hi.z = std::max<double>(hi.z, p.z);
        }
    }
    if (!any) throw Error("all clouds empty");

    GridSpec spec;
    spec.origin = lo;
    spec.voxel_size_mm = voxel_size_mm;
    const double span[3] = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
    for (int a = 0; a < 3; ++a)
        spec.dims[a] = std::max(1, static_cast<int>(std::ceil(span[a] / voxel_size_mm)));
    return spec;
}

// floor((p - origin) / voxel_size), clamped to the lattice.
inline std::array<int, 3> voxel_index(const GridSpec& spec, const Vec3f& p) {
    const double inv = 1.0 / spec.voxel_size_mm;
    std::array<int, 3> idx;
    const double rel[3] = {p.x - spec.origin.x, p.y - spec.origin.y, p.z - spec.origin.z};
    for (int a = 0; a < 3; ++a) {
        int i = static_cast<int>(std::floor(rel[a] * inv));
        idx[a] = std::clamp(i, 0, spec.dims[a] - 1);
    }
    return idx;
}

inline VoxelGrid voxelize(const PointCloud& cloud, const GridSpec& spec) {
    if (spec.dims[0] <= 0 || spec.dims[1] <= 0 || spec.dims[2] <= 0 || !(spec.voxel_size_mm > 0))
        throw Error("invalid grid spec");
    VoxelGrid grid;
    grid.spec = spec;
    grid.occupied.reserve(cloud.points.size());
    for (const Vec3f& p : cloud.points) {
        auto [x, y, z] = voxel_index(spec, p);
        grid.occupied.push_back(pack_voxel(x, y, z));
    }
    std::sort(grid.occupied.begin(), grid.occupied.end());
    grid.occupied.erase(std::unique(grid.occupied.begin(), grid.occupied.end()),
                        grid.occupied.end());
    return grid;
}

}  // namespace dv3

#pragma once

// Abstraction of motion grids into normalized point sets with concatenated
// multi-temporal motion features, plus raw-depth appearance point sets and
// the DV3P / PLY file formats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/depth_io.hpp"
#include "dv3/proposal.hpp"
#include "dv3/rankpool.hpp"

namespace dv3 {

// One record per point: (x, y, z) plus motion channels in fixed order
// (global first, then one per temporal split).
struct DvPointSet {
    int count = 0;
    int channels = 0;            // 1 + split count
    std::vector<float> xyz;     // 3 * count
    std::vector<float> motion;  // channels * count, row-major per point
    GridSpec source_spec;
    int split_count = 0;

    bool empty() const { return count == 0; }
    float* point(int i) { return xyz.data() + 3 * i; }
    const float* point(int i) const { return xyz.data() + 3 * i; }
    float* motion_row(int i) { return motion.data() + static_cast<std::size_t>(channels) * i; }
    const float* motion_row(int i) const {
        return motion.data() + static_cast<std::size_t>(channels) * i;
    }
};

struct AppearancePointSet {
    int count = 0;
    std::vector<float> xyz;  // 3 * count
    int split_index = 0;

    bool empty() const { return count == 0; }
};

// One point per voxel present in any grid; channel order (m_G, m_1, ...).
// Missing channels are 0; points whose channels are all zero are excluded.
// Coordinates are voxel indices (normalization happens separately).
inline DvPointSet assemble(const MotionGrid& global, std::span<const MotionGrid> splits) {
    for (const auto& s : splits)
        if (!(s.spec == global.spec)) throw Error("mismatched specs");

    const int channels = 1 + static_cast<int>(splits.size());

    std::vector<VoxelKey> keys;
    keys.reserve(global.motion.size());
    for (const auto& [k, v] : global.motion) keys.push_back(k);
    for (const auto& s : splits)
        for (const auto& [k, v] : s.motion) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    DvPointSet out;
    out.channels = channels;
    out.split_count = channels - 1;
    out.source_spec = global.spec;
    out.xyz.reserve(keys.size() * 3);
    out.motion.reserve(keys.size() * channels);

    std::vector<double> row(channels);
    for (VoxelKey key : keys) {
        std::fill(row.begin(), row.end(), 0.0);
        if (const double* v = global.find(key)) row[0] = *v;
        for (std::size_t s = 0; s < splits.size(); ++s)
            if (const double* v = splits[s].find(key)) row[1 + s] = *v;

        bool all_zero = true;
        for (double v : row)
            if (v != 0.0) { all_zero = false; break; }
        if (all_zero) continue;

        auto [x, y, z] = unpack_voxel(key);
        out.xyz.push_back(static_cast<float>(x));
        out.xyz.push_back(static_cast<float>(y));
        out.xyz.push_back(static_cast<float>(z));
        for (double v : row) out.motion.push_back(static_cast<float>(v));
        out.count++;
    }
    return out;
}

namespace detail {

// y is mapped to [-0.5, 0.5]; x and z are centered and divided by the same
// y-span scale so geometry is preserved.
inline void normalize_coords(std::vector<float>& xyz, int count) {
    double lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::numeric_limits<double>::infinity();
        hi[a] = -std::numeric_limits<double>::infinity();
    }
    for (int i = 0; i < count; ++i)
        for (int a = 0; a < 3; ++a) {
            double v = xyz[3 * i + a];
            lo[a] = std::min(lo[a], v);
            hi[a] = std::max(hi[a], v);
        }
    double scale = hi[1] - lo[1];
    if (scale == 0.0) scale = 1.0;
    const double mid[3] = {(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2};
    for (int i = 0; i < count; ++i)
        for (int a = 0; a < 3; ++a)
            xyz[3 * i + a] = static_cast<float>((xyz[3 * i + a] - mid[a]) / scale);
}

}  // namespace detail

// Joint linear map of all motion channels into [-0.5, 0.5]; degenerate
// ranges collapse to 0.
inline DvPointSet normalize(const DvPointSet& ps) {
    if (ps.empty()) throw Error("normalize: empty set");
    DvPointSet out = ps;
    detail::normalize_coords(out.xyz, out.count);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (float v : out.motion) {
        lo = std::min<double>(lo, v);
        hi = std::max<double>(hi, v);
    }
    const double range = hi - lo;
    for (float& v : out.motion)
        v = range == 0.0 ? 0.0f : static_cast<float>((v - lo) / range - 0.5);
    return out;
}

inline AppearancePointSet normalize(const AppearancePointSet& ps) {
    if (ps.empty()) throw Error("normalize: empty set");
    AppearancePointSet out = ps;
    detail::normalize_coords(out.xyz, out.count);
    return out;
}

// Middle frame index of each of the t2 overlapping splits.
inline std::vector<int> middle_frames(int frame_count, int t2) {
    SplitPlan plan = plan_splits(frame_count, t2);
    std::vector<int> mids;
    mids.reserve(plan.ranges.size());
    for (auto [start, end] : plan.ranges) mids.push_back((start + end) / 2);
    return mids;
}

// Raw depth point sets sampled from t2 temporal splits with action proposal:
// middle frame per split, cropped by region, normalized. When region.bbox is
// set the source frame and intrinsics are required for pixel membership.
inline std::vector<AppearancePointSet> appearance_inputs(
    std::span<const PointCloud> clouds, const ProposalRegion& region, int t2,
    const std::vector<DepthFrame>* frames = nullptr, const CameraIntrinsics* k = nullptr) {
    if (static_cast<int>(clouds.size()) < t2) throw Error("too few frames");

    std::vector<AppearancePointSet> out;
    const auto mids = middle_frames(static_cast<int>(clouds.size()), t2);
    for (std::size_t s = 0; s < mids.size(); ++s) {
        const int f = mids[s];
        PointCloud cropped;
        if (region.bbox) {
            if (!frames || !k) throw Error("appearance_inputs: bbox crop needs frame and intrinsics");
            cropped = crop(clouds[f], region, (*frames)[f], *k);
        } else {
            cropped = crop_by_depth(clouds[f], region.depth_threshold_mm);
        }
        if (cropped.empty()) throw Error("empty region");

        AppearancePointSet ps;
        ps.split_index = static_cast<int>(s);
        ps.count = static_cast<int>(cropped.size());
        ps.xyz.reserve(cropped.size() * 3);
        for (const Vec3f& p : cropped.points) {
            ps.xyz.push_back(p.x);
            ps.xyz.push_back(p.y);
            ps.xyz.push_back(p.z);
        }
        out.push_back(normalize(ps));
    }
    return out;
}

// ---------------------------------------------------------------------------
// DV3P file format: magic "DV3P", u32 version=1, u32 point count, u32 motion
// channel count, then count records of (3 + channels) little-endian f32.

namespace detail {

inline constexpr char kDv3pMagic[4] = {'D', 'V', '3', 'P'};
inline constexpr std::uint32_t kDv3pVersion = 1;

inline std::string encode_pointset(std::span<const float> xyz, std::span<const float> motion,
                                   int count, int channels) {
    std::string out;
    out.append(kDv3pMagic, 4);
    io::put_u32(out, kDv3pVersion);
    io::put_u32(out, static_cast<std::uint32_t>(count));
    io::put_u32(out, static_cast<std::uint32_t>(channels));
    for (int i = 0; i < count; ++i) {
        for (int a = 0; a < 3; ++a) io::put_f32(out, xyz[3 * i + a]);
        for (int c = 0; c < channels; ++c)
            io::put_f32(out, motion[static_cast<std::size_t>(channels) * i + c]);
    }
    return out;
}

}  // namespace detail

inline void write_pointset(const std::string& path, const DvPointSet& ps) {
    io::write_file(path, detail::encode_pointset(ps.xyz, ps.motion, ps.count, ps.channels));
}

inline void write_pointset(const std::string& path, const AppearancePointSet& ps) {
    io::write_file(path, detail::encode_pointset(ps.xyz, {}, ps.count, 0));
}

inline DvPointSet read_pointset(const std::string& path) {
    std::string buf = io::read_file(path);
    io::Reader r(buf);
    if (r.bytes(4) != std::string(detail::kDv3pMagic, 4)) throw Error("dv3p: bad magic in " + path);
    std::uint32_t version = r.u32();
    if (version != detail::kDv3pVersion)
        throw Error("dv3p: unsupported version " + std::to_string(version) + " in " + path);
    std::uint32_t count = r.u32();
    std::uint32_t channels = r.u32();

    DvPointSet ps;
    ps.count = static_cast<int>(count);
    ps.channels = static_cast<int>(channels);
    ps.split_count = channels > 0 ? static_cast<int>(channels) - 1 : 0;
    ps.xyz.resize(static_cast<std::size_t>(count) * 3);
    ps.motion.resize(static_cast<std::size_t>(count) * channels);
    for (std::uint32_t i = 0; i < count; ++i) {
        for (int a = 0; a < 3; ++a) ps.xyz[3 * i + a] = r.f32();
        for (std::uint32_t c = 0; c < channels; ++c)
            ps.motion[static_cast<std::size_t>(channels) * i + c] = r.f32();
    }
    if (!r.at_end()) throw Error("dv3p: trailing bytes in " + path);
    return ps;
}

// ASCII PLY with x, y, z plus one scalar property per motion channel.
inline void export_ply(const std::string& path, const DvPointSet& ps) {
    std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(ps.count) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    for (int c = 0; c < ps.channels; ++c)
        out += "property float " + (c == 0 ? std::string("motion_g")
                                           : "motion_" + std::to_string(c)) + "\n";
    out += "end_header\n";
    char buf[64];
    for (int i = 0; i < ps.count; ++i) {
        for (int a = 0; a < 3; ++a) {
            std::snprintf(buf, sizeof buf, a ? " %.9g" : "%.9g", ps.xyz[3 * i + a]);
            out += buf;
        }
        for (int c = 0; c < ps.channels; ++c) {
            std::snprintf(buf, sizeof buf, " %.9g", ps.motion_row(i)[c]);
            out += buf;
        }
        out += "\n";
    }
    io::write_file(path, out);
}

}  // namespace dv3

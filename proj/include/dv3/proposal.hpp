#pragma once

// Action proposal: isolate the moving subject by depth-histogram
// thresholding, optionally inside a 2D person bounding box.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/depth_io.hpp"

namespace dv3 {

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    bool contains(int u, int v) const { return u >= x && u < x + w && v >= y && v < y + h; }
};

struct DepthHistogram {
    static constexpr int bin_width_mm = 100;
    std::vector<std::uint32_t> counts;  // indexed from depth 0, half-open bins

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

struct ProposalRegion {
    std::optional<Rect> bbox;
    double depth_threshold_mm = 0;  // keep points with z strictly below
};

inline void validate_bbox(const Rect& b, int width, int height) {
    if (b.w <= 0 || b.h <= 0 || b.x < 0 || b.y < 0 || b.x + b.w > width || b.y + b.h > height)
        throw Error("bbox out of frame bounds");
}

// Counts nonzero depths inside bbox (whole frame when absent).
// Bins are half-open: depth d lands in bin d / 100.
inline DepthHistogram build_histogram(const DepthFrame& frame,
                                      const std::optional<Rect>& bbox = std::nullopt) {
    if (bbox) validate_bbox(*bbox, frame.width, frame.height);
    int u0 = bbox ? bbox->x : 0;
    int v0 = bbox ? bbox->y : 0;
    int u1 = bbox ? bbox->x + bbox->w : frame.width;
    int v1 = bbox ? bbox->y + bbox->h : frame.height;

    DepthHistogram h;
    for (int v = v0; v < v1; ++v) {
        for (int u = u0; u < u1; ++u) {
            std::uint16_t d = frame.at(u, v);
            if (d == 0) continue;
            std::size_t bin = d / DepthHistogram::bin_width_mm;
            if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
            h.counts[bin]++;
        }
    }
    if (h.counts.empty()) throw Error("empty region");
    return h;
}

// Mode-bin center + 200 mm; count ties resolve toward the nearer bin.
inline double compute_threshold(const DepthHistogram& h) {
    if (h.counts.empty()) throw Error("empty histogram");
    std::size_t best = 0;
    for (std::size_t b = 1; b < h.counts.size(); ++b)
        if (h.counts[b] > h.counts[best]) best = b;
    double center = (static_cast<double>(best) + 0.5) * DepthHistogram::bin_width_mm;
    return center + 200.0;
}

// Keeps points whose source pixel lies in region.bbox (when present) and
// whose depth is strictly below the threshold.
inline PointCloud crop(const PointCloud& cloud, const ProposalRegion& region,
                       const DepthFrame& frame, const CameraIntrinsics& k) {
    if (!(region.depth_threshold_mm > 0)) throw Error("proposal: non-positive depth threshold");
    if (region.bbox) validate_bbox(*region.bbox, frame.width, frame.height);

    PointCloud out;
    out.points.reserve(cloud.points.size());
    const float threshold = static_cast<float>(region.depth_threshold_mm);
    for (const Vec3f& p : cloud.points) {
        if (!(p.z < threshold)) continue;
        if (region.bbox) {
            auto [u, v] = forward_project(p, k);
            int iu = static_cast<int>(std::lround(u));
            int iv = static_cast<int>(std::lround(v));
            if (!region.bbox->contains(iu, iv)) continue;
        }
        out.points.push_back(p);
    }
    return out;
}

// Depth-only crop for clouds that were already bbox-filtered upstream.
inline PointCloud crop_by_depth(const PointCloud& cloud, double threshold_mm) {
    if (!(threshold_mm > 0)) throw Error("proposal: non-positive depth threshold");
    PointCloud out;
    out.points.reserve(cloud.points.size());
    const float threshold = static_cast<float>(threshold_mm);
    for (const Vec3f& p : cloud.points)
        if (p.z < threshold) out.points.push_back(p);
    return out;
}

// Bbox file: one line per frame, "frame_index x y w h".
inline std::map<int, Rect> parse_bbox_file(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::map<int, Rect> boxes;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        int idx;
        Rect r;
        if (!(ls >> idx >> r.x >> r.y >> r.w >> r.h))
            throw Error("bbox file: malformed line " + std::to_string(lineno) + " in " + path);
        boxes[idx] = r;
    }
    return boxes;
}

inline std::string format_bbox_file(const std::vector<Rect>& boxes) {
    std::string out;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        out += std::to_string(i) + " " + std::to_string(boxes[i].x) + " " +
               std::to_string(boxes[i].y) + " " + std::to_string(boxes[i].w) + " " +
               std::to_string(boxes[i].h) + "\n";
    }
    return out;
}

}  // namespace dv3

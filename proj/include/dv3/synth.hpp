#pragma once

// Procedural depth-action generator: a sphere moving over a flat background
// plane, rendered through the pinhole model. Eight classes with analytically
// known motion structure stand in for captured data at desk scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/depth_io.hpp"
#include "dv3/proposal.hpp"

namespace dv3 {

enum class SynthClass : int {
    translate_pos_x = 0,
    translate_neg_x = 1,
    translate_pos_y = 2,
    translate_neg_y = 3,
    translate_pos_z = 4,  // away from camera
    translate_neg_z = 5,  // toward camera
    oscillate = 6,
    static_scene = 7,
};

inline constexpr int kSynthClassCount = 8;

inline const char* synth_class_name(int class_id) {
    static const char* names[kSynthClassCount] = {
        "translate_pos_x", "translate_neg_x", "translate_pos_y", "translate_neg_y",
        "translate_pos_z", "translate_neg_z", "oscillate",       "static_scene"};
    if (class_id < 0 || class_id >= kSynthClassCount) throw Error("unknown synth class");
    return names[class_id];
}

struct SynthSpec {
    int class_id = 0;
    int frames = 24;
    int width = 160;
    int height = 120;
    double radius_mm = 100.0;   // sphere radius
    double noise_sigma_mm = 0.5;
    std::uint64_t seed = 0;

    // Motion extents. Lateral travel is generous; depth travel stays within
    // the +200 mm proposal margin so a first-frame threshold keeps the
    // object visible for the whole clip.
    double base_z_mm = 1800.0;
    double travel_xy_mm = 240.0;
    double travel_z_mm = 140.0;
};

namespace detail {

inline Vec3d synth_center(const SynthSpec& spec, int frame) {
    const double s = spec.frames > 1 ? static_cast<double>(frame) / (spec.frames - 1) : 0.0;
    const double half_xy = spec.travel_xy_mm / 2.0;
    const double half_z = spec.travel_z_mm / 2.0;
    switch (static_cast<SynthClass>(spec.class_id)) {
        case SynthClass::translate_pos_x: return {-half_xy + spec.travel_xy_mm * s, 0, spec.base_z_mm};
        case SynthClass::translate_neg_x: return {half_xy - spec.travel_xy_mm * s, 0, spec.base_z_mm};
        case SynthClass::translate_pos_y: return {0, -half_xy + spec.travel_xy_mm * s, spec.base_z_mm};
        case SynthClass::translate_neg_y: return {0, half_xy - spec.travel_xy_mm * s, spec.base_z_mm};
        case SynthClass::translate_pos_z: return {0, 0, spec.base_z_mm - half_z + spec.travel_z_mm * s};
        case SynthClass::translate_neg_z: return {0, 0, spec.base_z_mm + half_z - spec.travel_z_mm * s};
        case SynthClass::oscillate:
            // Two full periods: revisited voxels largely cancel in whole-video
            // rank pooling, so per-split motion channels carry the class.
            return {half_xy * std::sin(4.0 * 3.14159265358979323846 * s), 0, spec.base_z_mm};
        case SynthClass::static_scene: return {0, 0, spec.base_z_mm};
    }
    throw Error("unknown synth class");
}

inline double synth_plane_depth(const SynthSpec& spec) {
    double farthest = 0;
    for (int f = 0; f < spec.frames; ++f)
        farthest = std::max(farthest, synth_center(spec, f).z + spec.radius_mm);
    return farthest + 1500.0;
}

}  // namespace detail

// Analytic per-frame pixel bounding boxes of the sphere (conservative,
// clamped to the frame). Usable as the proposal module's bbox input.
inline std::vector<Rect> synth_bboxes(const SynthSpec& spec) {
    const CameraIntrinsics k = default_intrinsics(spec.width, spec.height);
    std::vector<Rect> boxes;
    boxes.reserve(spec.frames);
    for (int f = 0; f < spec.frames; ++f) {
        const Vec3d c = detail::synth_center(spec, f);
        const double z_near = c.z - spec.radius_mm;
        const double u = c.x * k.fx / c.z + k.cx;
        const double v = k.cy - c.y * k.fy / c.z;
        const double r_px = spec.radius_mm * std::max(k.fx, k.fy) / z_near + 2.0;
        int x0 = std::max(0, static_cast<int>(std::floor(u - r_px)));
        int y0 = std::max(0, static_cast<int>(std::floor(v - r_px)));
        int x1 = std::min(spec.width, static_cast<int>(std::ceil(u + r_px)));
        int y1 = std::min(spec.height, static_cast<int>(std::ceil(v + r_px)));
        boxes.push_back({x0, y0, x1 - x0, y1 - y0});
    }
    return boxes;
}

// Renders the clip. Deterministic given the seed; errors if the sphere would
// clip the frame edge.
inline std::vector<DepthFrame> generate(const SynthSpec& spec) {
    if (spec.frames < 8) throw Error("synth: need at least 8 frames");
    if (!(spec.radius_mm > 0)) throw Error("synth: radius must be positive");

    const CameraIntrinsics k = default_intrinsics(spec.width, spec.height);
    const double plane_z = detail::synth_plane_depth(spec);

    // Frustum check via the projected disc.
    for (int f = 0; f < spec.frames; ++f) {
        const Vec3d c = detail::synth_center(spec, f);
        const double z_near = c.z - spec.radius_mm;
        if (z_near <= 0) throw Error("out of view");
        const double u = c.x * k.fx / c.z + k.cx;
        const double v = k.cy - c.y * k.fy / c.z;
        const double r_px = spec.radius_mm * std::max(k.fx, k.fy) / z_near;
        if (u - r_px < 0 || u + r_px >= spec.width || v - r_px < 0 || v + r_px >= spec.height)
            throw Error("out of view");
    }

    std::vector<DepthFrame> frames(static_cast<std::size_t>(spec.frames));
    for (int f = 0; f < spec.frames; ++f) {
        DepthFrame& frame = frames[static_cast<std::size_t>(f)];
        frame.width = spec.width;
        frame.height = spec.height;
        frame.timestamp_index = f;
        frame.data.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);

        const Vec3d c = detail::synth_center(spec, f);
        const double r2 = spec.radius_mm * spec.radius_mm;
        Rng noise = Rng::derive(spec.seed, 0x73796e, static_cast<std::uint64_t>(f));

        for (int v = 0; v < spec.height; ++v) {
            for (int u = 0; u < spec.width; ++u) {
                // Ray through the pixel: p(z) = (dx z, dy z, z).
                const double dx = (u - k.cx) / k.fx;
                const double dy = -(v - k.cy) / k.fy;
                const double a = dx * dx + dy * dy + 1.0;
                const double b = dx * c.x + dy * c.y + c.z;  // = (d . c)
                const double disc = b * b - a * (c.squared_norm() - r2);
                double depth = plane_z;
                if (disc >= 0) {
                    const double z_hit = (b - std::sqrt(disc)) / a;
                    if (z_hit > 0) depth = z_hit;
                }
                if (spec.noise_sigma_mm > 0) depth += noise.normal() * spec.noise_sigma_mm;
                const long quantized = std::lround(depth);
                frame.at(u, v) = static_cast<std::uint16_t>(
                    std::clamp<long>(quantized, 1, 65535));
            }
        }
    }
    return frames;
}

struct ManifestEntry {
    std::string path;
    int class_id = 0;
    std::string split;  // "train" or "test"
};

inline std::string format_manifest(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries)
        out += e.path + "," + std::to_string(e.class_id) + "," + e.split + "\n";
    return out;
}

// Relative clip paths resolve against the manifest's own directory, so a
// dataset directory can be moved or used from any working directory.
inline std::vector<ManifestEntry> parse_manifest(const std::string& path) {
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::istringstream in(io::read_file(path));
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw Error("manifest: malformed line " + std::to_string(lineno) + " in " + path);
        ManifestEntry e;
        e.path = line.substr(0, c1);
        try {
            e.class_id = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
        } catch (const std::exception&) {
            throw Error("manifest: bad class id on line " + std::to_string(lineno));
        }
        e.split = line.substr(c2 + 1);
        while (!e.split.empty() && (e.split.back() == '\r' || e.split.back() == ' '))
            e.split.pop_back();
        if (e.split != "train" && e.split != "test")
            throw Error("manifest: split must be train or test on line " + std::to_string(lineno));
        if (!std::filesystem::path(e.path).is_absolute() && !base.empty())
            e.path = (base / e.path).string();
        entries.push_back(std::move(e));
    }
    return entries;
}

struct DatasetParams {
    int n_train_per_class = 4;
    int n_test_per_class = 2;
    int frames = 24;
    int width = 160;
    int height = 120;
    double radius_mm = 100.0;
    double noise_sigma_mm = 0.5;
    std::uint64_t base_seed = 1;
};

// Writes one d16 clip + bbox file per sample under out_dir, plus
// manifest.csv. Train and test draw from disjoint seed ranges; classes stay
// balanced.
inline std::vector<ManifestEntry> make_dataset(const std::string& out_dir,
                                               const DatasetParams& params) {
    if (params.n_train_per_class < 1 || params.n_test_per_class < 1)
        throw Error("make_dataset: need at least one sample per class and split");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // Returned entries carry usable paths; manifest rows store filenames
    // relative to the manifest so the directory stays relocatable.
    std::vector<ManifestEntry> entries;
    std::vector<ManifestEntry> manifest_rows;
    constexpr std::uint64_t kTestSeedOffset = 1u << 20;
    for (int cls = 0; cls < kSynthClassCount; ++cls) {
        for (int split = 0; split < 2; ++split) {
            const bool is_test = split == 1;
            const int count = is_test ? params.n_test_per_class : params.n_train_per_class;
            for (int i = 0; i < count; ++i) {
                SynthSpec spec;
                spec.class_id = cls;
                spec.frames = params.frames;
                spec.width = params.width;
                spec.height = params.height;
                spec.radius_mm = params.radius_mm;
                spec.noise_sigma_mm = params.noise_sigma_mm;
                spec.seed = params.base_seed + (is_test ? kTestSeedOffset : 0) +
                            static_cast<std::uint64_t>(cls) * 4096 + static_cast<std::uint64_t>(i);

                const std::string stem = std::string(is_test ? "test" : "train") + "_" +
                                         synth_class_name(cls) + "_" + std::to_string(i);
                const std::string clip_path = (fs::path(out_dir) / (stem + ".d16")).string();
                write_d16(clip_path, generate(spec));
                io::write_file((fs::path(out_dir) / (stem + ".bbox.txt")).string(),
                               format_bbox_file(synth_bboxes(spec)));
                entries.push_back({clip_path, cls, is_test ? "test" : "train"});
                manifest_rows.push_back({stem + ".d16", cls, entries.back().split});
            }
        }
    }
    io::write_file((fs::path(out_dir) / "manifest.csv").string(), format_manifest(manifest_rows));
    return entries;
}

}  // namespace dv3

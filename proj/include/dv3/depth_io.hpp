#pragma once

// Depth-frame decoding and back-projection into metric point clouds.
//
// Depth values are millimeters; 0 marks an invalid pixel. Camera frame is
// x right, y up, z forward, so back-projection flips the image v axis.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/png_io.hpp"

namespace dv3 {

struct DepthFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;  // row-major, mm, 0 = invalid
    int timestamp_index = 0;

    std::uint16_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
    std::uint16_t& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
};

struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
};

struct PointCloud {
    std::vector<Vec3f> points;  // mm, camera coordinates, z > 0

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

// Plausible consumer depth camera FOV; override via an intrinsics file.
inline CameraIntrinsics default_intrinsics(int width, int height) {
    return {280.0, 280.0, width / 2.0, height / 2.0};
}

inline void validate(const CameraIntrinsics& k) {
    if (!(k.fx > 0) || !(k.fy > 0)) throw Error("intrinsics: fx and fy must be positive");
}

// "key = value" UTF-8 file with keys fx, fy, cx, cy. '#' starts a comment.
inline CameraIntrinsics load_intrinsics(const std::string& path) {
    std::istringstream in(io::read_file(path));
    CameraIntrinsics k;
    bool seen[4] = {false, false, false, false};
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "fx") { k.fx = std::stod(val); seen[0] = true; }
            else if (key == "fy") { k.fy = std::stod(val); seen[1] = true; }
            else if (key == "cx") { k.cx = std::stod(val); seen[2] = true; }
            else if (key == "cy") { k.cy = std::stod(val); seen[3] = true; }
        } catch (const std::exception&) {
            throw Error("intrinsics: non-numeric value for " + key + " in " + path);
        }
    }
    if (!(seen[0] && seen[1] && seen[2] && seen[3]))
        throw Error("intrinsics: missing keys in " + path);
    validate(k);
    return k;
}

enum class DepthFormat {
    png_directory,  // one 16-bit grayscale PNG per frame, lexicographic order
    d16,            // single "DV3D" container file
};

namespace detail {

inline constexpr char kD16Magic[4] = {'D', 'V', '3', 'D'};
inline constexpr std::uint32_t kD16Version = 1;

inline std::vector<DepthFrame> decode_d16(const std::string& path) {
    std::string buf = io::read_file(path);
    io::Reader r(buf);
    if (r.bytes(4) != std::string(kD16Magic, 4)) throw Error("d16: bad magic in " + path);
    if (r.u32() != kD16Version) throw Error("d16: unsupported version in " + path);
    std::uint32_t width = r.u32();
    std::uint32_t height = r.u32();
    std::uint32_t count = r.u32();
    if (width == 0 || height == 0) throw Error("d16: bad dimensions in " + path);
    if (count == 0) throw Error("zero frames in " + path);

    std::vector<DepthFrame> frames(count);
    for (std::uint32_t f = 0; f < count; ++f) {
        DepthFrame& frame = frames[f];
        frame.width = static_cast<int>(width);
        frame.height = static_cast<int>(height);
        frame.timestamp_index = static_cast<int>(f);
        frame.data.resize(static_cast<std::size_t>(width) * height);
        for (auto& d : frame.data) d = r.u16();
    }
    if (!r.at_end()) throw Error("d16: trailing bytes in " + path);
    return frames;
}

inline std::vector<DepthFrame> decode_png_directory(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == ".png") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("zero frames in " + path);

    std::vector<DepthFrame> frames;
    frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        png::Gray16Image img = png::decode_gray16(io::read_file(files[i]));
        if (!frames.empty() &&
            (img.width != frames.front().width || img.height != frames.front().height))
            throw Error("inconsistent resolution: " + files[i]);
        DepthFrame f;
        f.width = img.width;
        f.height = img.height;
        f.data = std::move(img.pixels);
        f.timestamp_index = static_cast<int>(i);
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace detail

inline std::vector<DepthFrame> decode_depth_sequence(const std::string& path, DepthFormat format) {
    if (!std::filesystem::exists(path)) throw Error("no such path: " + path);
    switch (format) {
        case DepthFormat::d16: return detail::decode_d16(path);
        case DepthFormat::png_directory: return detail::decode_png_directory(path);
    }
    throw Error("unsupported depth format");
}

// Directory -> PNG sequence, file -> d16 container.
inline std::vector<DepthFrame> decode_depth_auto(const std::string& path) {
    if (std::filesystem::is_directory(path))
        return decode_depth_sequence(path, DepthFormat::png_directory);
    return decode_depth_sequence(path, DepthFormat::d16);
}

inline void write_d16(const std::string& path, const std::vector<DepthFrame>& frames) {
    if (frames.empty()) throw Error("zero frames");
    std::string out;
    out.append(detail::kD16Magic, 4);
    io::put_u32(out, detail::kD16Version);
    io::put_u32(out, static_cast<std::uint32_t>(frames.front().width));
    io::put_u32(out, static_cast<std::uint32_t>(frames.front().height));
    io::put_u32(out, static_cast<std::uint32_t>(frames.size()));
    for (const auto& f : frames) {
        if (f.width != frames.front().width || f.height != frames.front().height)
            throw Error("inconsistent resolution");
        for (std::uint16_t d : f.data) io::put_u16(out, d);
    }
    io::write_file(path, out);
}

inline void write_png_frame(const std::string& path, const DepthFrame& frame) {
    io::write_file(path, png::encode_gray16(frame.data, frame.width, frame.height));
}

// (u, v, d) -> ((u - cx) d / fx, -(v - cy) d / fy, d). Zero depths skipped.
inline PointCloud back_project(const DepthFrame& frame, const CameraIntrinsics& k) {
    validate(k);
    PointCloud cloud;
    cloud.points.reserve(frame.data.size() / 4);
    const float fx = static_cast<float>(k.fx), fy = static_cast<float>(k.fy);
    const float cx = static_cast<float>(k.cx), cy = static_cast<float>(k.cy);
    for (int v = 0; v < frame.height; ++v) {
        const std::uint16_t* row = frame.data.data() + static_cast<std::size_t>(v) * frame.width;
        for (int u = 0; u < frame.width; ++u) {
            std::uint16_t d = row[u];
            if (d == 0) continue;
            float z = static_cast<float>(d);
            cloud.points.push_back({(u - cx) * z / fx, -(v - cy) * z / fy, z});
        }
    }
    return cloud;
}

// Inverse of back_project for a single point; returns fractional pixel coords.
inline std::pair<float, float> forward_project(const Vec3f& p, const CameraIntrinsics& k) {
    return {static_cast<float>(p.x * k.fx / p.z + k.cx),
            static_cast<float>(k.cy - p.y * k.fy / p.z)};
}

}  // namespace dv3

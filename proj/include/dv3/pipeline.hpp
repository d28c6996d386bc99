#pragma once

// End-to-end extraction: depth frames -> proposal -> point clouds -> voxel
// grids -> rank pooling (global + temporal splits) -> normalized point sets,
// with per-stage timings. Batch helpers turn dataset manifests into training
// samples.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/depth_io.hpp"
#include "dv3/net.hpp"
#include "dv3/pointset.hpp"
#include "dv3/proposal.hpp"
#include "dv3/rankpool.hpp"
#include "dv3/synth.hpp"
#include "dv3/voxel.hpp"

namespace dv3 {

enum class PoolMode { approx, exact };

struct PipelineConfig {
    double voxel_size_mm = 35.0;
    int t1 = 4;  // temporal splits for motion channels
    int t2 = 3;  // appearance streams
    PoolMode pooling = PoolMode::approx;
    int sample_points = 2048;  // per-stream sampling at train time
    bool proposal = true;
    RankPoolConfig rank_cfg;
};

// Stage names follow the extraction report: proposal, voxelization,
// rank pooling, pointlization.
struct StageTimings {
    double proposal_ms = 0;
    double voxelization_ms = 0;
    double rank_pooling_ms = 0;
    double pointlization_ms = 0;

    double total_ms() const {
        return proposal_ms + voxelization_ms + rank_pooling_ms + pointlization_ms;
    }
};

struct ExtractOutput {
    DvPointSet motion;  // normalized; empty when the whole clip is motionless
    std::vector<AppearancePointSet> appearance;
    StageTimings timings;
    bool rank_converged = true;
};

namespace detail {

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}

    double lap_ms() {
        auto now = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(now - start_).count();
        start_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline MotionGrid pool_range(std::span<const VoxelGrid> grids, const PipelineConfig& cfg,
                             bool* converged) {
    if (cfg.pooling == PoolMode::approx) return pool_approx(grids);
    ExactPoolResult r = pool_exact(grids, cfg.rank_cfg);
    if (converged && !r.converged) *converged = false;
    return std::move(r.grid);
}

}  // namespace detail

// Per-frame bounding boxes (possibly empty) come from the optional bbox
// file. The depth threshold is computed once from the first frame and reused
// for the whole video.
inline ExtractOutput extract_from_frames(const std::vector<DepthFrame>& frames,
                                         const CameraIntrinsics& k, const PipelineConfig& cfg,
                                         const std::map<int, Rect>& bboxes = {}) {
    if (frames.empty()) throw Error("zero frames");
    if (cfg.t1 < 1 || cfg.t2 < 1) throw Error("pipeline: t1 and t2 must be >= 1");

    const int T = static_cast<int>(frames.size());
    ExtractOutput out;
    detail::StageClock clock;

    auto bbox_for = [&](int f) -> std::optional<Rect> {
        auto it = bboxes.find(f);
        if (it == bboxes.end()) return std::nullopt;
        return it->second;
    };

    // Proposal: threshold from the first frame's histogram, then per-frame
    // crop against (bbox, threshold).
    double threshold_mm = std::numeric_limits<double>::max();
    if (cfg.proposal) {
        DepthHistogram hist = build_histogram(frames.front(), bbox_for(0));
        threshold_mm = compute_threshold(hist);
    }
    out.timings.proposal_ms = clock.lap_ms();

    // Back-project and crop every frame, then voxelize over a shared lattice.
    std::vector<PointCloud> clouds(static_cast<std::size_t>(T));
    for (int f = 0; f < T; ++f) {
        PointCloud cloud = back_project(frames[static_cast<std::size_t>(f)], k);
        if (cfg.proposal) {
            ProposalRegion region{bbox_for(f), threshold_mm};
            cloud = crop(cloud, region, frames[static_cast<std::size_t>(f)], k);
        }
        clouds[static_cast<std::size_t>(f)] = std::move(cloud);
    }
    GridSpec spec = fit_grid(clouds, cfg.voxel_size_mm);
    std::vector<VoxelGrid> grids(static_cast<std::size_t>(T));
    for (int f = 0; f < T; ++f)
        grids[static_cast<std::size_t>(f)] = voxelize(clouds[static_cast<std::size_t>(f)], spec);
    out.timings.voxelization_ms = clock.lap_ms();

    // Rank pooling: whole video plus t1 overlapping splits.
    MotionGrid global = detail::pool_range(grids, cfg, &out.rank_converged);
    SplitPlan plan = plan_splits(T, cfg.t1);
    std::vector<MotionGrid> split_grids;
    split_grids.reserve(plan.ranges.size());
    for (auto [start, end] : plan.ranges)
        split_grids.push_back(detail::pool_range(
            std::span<const VoxelGrid>(grids).subspan(start, end - start), cfg,
            &out.rank_converged));
    out.timings.rank_pooling_ms = clock.lap_ms();

    // Pointlization: motion point set + appearance point sets.
    DvPointSet assembled = assemble(global, split_grids);
    out.motion = assembled.empty() ? assembled : normalize(assembled);
    ProposalRegion depth_only{std::nullopt, cfg.proposal
                                                ? threshold_mm
                                                : std::numeric_limits<float>::max() / 2.0};
    out.appearance = appearance_inputs(clouds, depth_only, cfg.t2);
    out.timings.pointlization_ms = clock.lap_ms();
    return out;
}

// Looks for "<clip stem>.bbox.txt" next to a clip (or "bbox.txt" inside a
// PNG directory) when no explicit bbox file is given and proposal is on.
inline std::map<int, Rect> discover_bboxes(const std::string& clip_path,
                                           const std::string& explicit_bbox_file,
                                           bool proposal_enabled) {
    if (!explicit_bbox_file.empty()) return parse_bbox_file(explicit_bbox_file);
    if (!proposal_enabled) return {};
    namespace fs = std::filesystem;
    fs::path p(clip_path);
    fs::path candidate = fs::is_directory(p) ? p / "bbox.txt"
                                             : p.parent_path() / (p.stem().string() + ".bbox.txt");
    if (fs::exists(candidate)) return parse_bbox_file(candidate.string());
    return {};
}

inline ExtractOutput extract_from_path(const std::string& clip_path, const CameraIntrinsics& k,
                                       const PipelineConfig& cfg,
                                       const std::string& bbox_file = "") {
    auto frames = decode_depth_auto(clip_path);
    auto bboxes = discover_bboxes(clip_path, bbox_file, cfg.proposal);
    return extract_from_frames(frames, k, cfg, bboxes);
}

// ---------------------------------------------------------------------------
// Dataset assembly for training / evaluation

struct LabeledSample {
    net::Sample sample;
    std::string path;
};

// Extracts every manifest entry of the requested split into network-ready
// samples, in manifest order. Per-video work fans out across `jobs` threads.
inline std::vector<net::Sample> build_dataset(std::span<const ManifestEntry> entries,
                                              const std::string& split,
                                              const CameraIntrinsics& k,
                                              const PipelineConfig& cfg, int jobs = 0) {
    std::vector<const ManifestEntry*> selected;
    for (const auto& e : entries)
        if (e.split == split) selected.push_back(&e);
    std::vector<net::Sample> samples(selected.size());
    if (selected.empty()) return samples;

    int n_threads = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, static_cast<int>(selected.size()));

    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> futs;
    std::string first_error;
    std::mutex error_mutex;
    for (int t = 0; t < n_threads; ++t) {
        futs.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < selected.size(); i = next.fetch_add(1)) {
                try {
                    ExtractOutput ex = extract_from_path(selected[i]->path, k, cfg);
                    samples[i].motion = std::move(ex.motion);
                    samples[i].appearance = std::move(ex.appearance);
                    samples[i].label = selected[i]->class_id;
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error.empty())
                        first_error = selected[i]->path + ": " + e.what();
                }
            }
        }));
    }
    for (auto& f : futs) f.get();
    if (!first_error.empty()) throw Error("extract failed for " + first_error);
    return samples;
}

}  // namespace dv3

#include <doctest.h>

#include <cmath>
#include <set>

#include "dv3/pipeline.hpp"
#include "dv3/synth.hpp"
#include "test_util.hpp"

using namespace dv3;

namespace {

SynthSpec base_spec(int class_id, double noise = 0.0, std::uint64_t seed = 0) {
    SynthSpec s;
    s.class_id = class_id;
    s.noise_sigma_mm = noise;
    s.seed = seed;
    return s;
}

// Mean image-x of object pixels (anything clearly in front of the plane).
double object_centroid_u(const DepthFrame& f, double plane_z) {
    double sum = 0;
    int n = 0;
    for (int v = 0; v < f.height; ++v)
        for (int u = 0; u < f.width; ++u)
            if (f.at(u, v) < plane_z - 500) {
                sum += u;
                ++n;
            }
    return n ? sum / n : -1;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("static class with zero noise renders identical frames") {
    auto frames = generate(base_spec(static_cast<int>(SynthClass::static_scene)));
    REQUIRE(frames.size() == 24);
    for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i].data == frames[0].data);
}

TEST_CASE("translate+x moves the object pixel centroid right") {
    SynthSpec spec = base_spec(static_cast<int>(SynthClass::translate_pos_x));
    auto frames = generate(spec);
    const double plane = 1800 + 100 + 1500;
    double prev = -1e9;
    for (const auto& f : frames) {
        double u = object_centroid_u(f, plane);
        REQUIRE(u >= 0);
        CHECK(u > prev);
        prev = u;
    }
}

TEST_CASE("same seed reproduces bit-identical frames") {
    auto a = generate(base_spec(0, 2.0, 99));
    auto b = generate(base_spec(0, 2.0, 99));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].data == b[i].data);

    auto c = generate(base_spec(0, 2.0, 100));
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].data != c[i].data;
    CHECK(any_diff);
}

TEST_CASE("object leaving the frustum is an error") {
    SynthSpec spec = base_spec(static_cast<int>(SynthClass::translate_pos_x));
    spec.travel_xy_mm = 5000;
    CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("out of view"), Error);

    SynthSpec tiny = base_spec(0);
    tiny.frames = 4;
    CHECK_THROWS_AS(generate(tiny), Error);
}

TEST_CASE("bbox contains every object pixel") {
    SynthSpec spec = base_spec(static_cast<int>(SynthClass::oscillate));
    auto frames = generate(spec);
    auto boxes = synth_bboxes(spec);
    const double plane = 1800 + 100 + 1500;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        for (int v = 0; v < frames[f].height; ++v)
            for (int u = 0; u < frames[f].width; ++u)
                if (frames[f].at(u, v) < plane - 500) CHECK(boxes[f].contains(u, v));
    }
}

TEST_CASE("make_dataset writes balanced splits with distinct clips") {
    testutil::TempDir dir("dataset");
    DatasetParams params;
    params.n_train_per_class = 2;
    params.n_test_per_class = 1;
    params.frames = 10;
    params.width = 96;
    params.height = 72;
    auto entries = make_dataset(dir.str(), params);
    CHECK(entries.size() == 8 * 3);

    int train = 0, test = 0;
    std::map<int, int> per_class;
    for (const auto& e : entries) {
        (e.split == "train" ? train : test)++;
        per_class[e.class_id]++;
        CHECK(std::filesystem::exists(e.path));
    }
    CHECK(train == 16);
    CHECK(test == 8);
    for (auto [cls, count] : per_class) CHECK(count == 3);

    // Disjoint seed ranges: the train and test clips of a class differ.
    std::string train0 = io::read_file(dir.file("train_translate_pos_x_0.d16"));
    std::string test0 = io::read_file(dir.file("test_translate_pos_x_0.d16"));
    CHECK(train0 != test0);

    auto parsed = parse_manifest(dir.file("manifest.csv"));
    CHECK(parsed.size() == entries.size());
    CHECK(parsed[0].class_id == entries[0].class_id);
    CHECK(parsed[0].split == entries[0].split);
}

TEST_CASE("pipeline motion semantics: translate+x ends positive to the right") {
    SynthSpec spec = base_spec(static_cast<int>(SynthClass::translate_pos_x));
    auto frames = generate(spec);
    auto k = default_intrinsics(spec.width, spec.height);
    auto boxes = synth_bboxes(spec);

    // Manual pipeline up to the unnormalized 3DV.
    DepthHistogram hist = build_histogram(frames[0], boxes[0]);
    const double threshold = compute_threshold(hist);
    std::vector<PointCloud> clouds;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        PointCloud cloud = back_project(frames[f], k);
        clouds.push_back(crop(cloud, {boxes[f], threshold}, frames[f], k));
        CHECK(!clouds.back().empty());
    }
    GridSpec grid_spec = fit_grid(clouds, 35.0);
    std::vector<VoxelGrid> grids;
    for (const auto& c : clouds) grids.push_back(voxelize(c, grid_spec));
    MotionGrid motion = pool_approx(grids);

    double pos_sum = 0, neg_sum = 0;
    int pos_n = 0, neg_n = 0;
    for (const auto& [key, value] : motion.motion) {
        auto [x, y, z] = unpack_voxel(key);
        if (value > 1e-9) {
            pos_sum += x;
            ++pos_n;
        } else if (value < -1e-9) {
            neg_sum += x;
            ++neg_n;
        }
    }
    REQUIRE(pos_n > 0);
    REQUIRE(neg_n > 0);
    CHECK(pos_sum / pos_n > neg_sum / neg_n);
}

TEST_CASE("static zero-noise clip yields an empty 3DV point set") {
    SynthSpec spec = base_spec(static_cast<int>(SynthClass::static_scene));
    auto frames = generate(spec);
    auto k = default_intrinsics(spec.width, spec.height);

    PipelineConfig cfg;
    cfg.proposal = true;
    std::map<int, Rect> boxes;
    auto bb = synth_bboxes(spec);
    for (std::size_t i = 0; i < bb.size(); ++i) boxes[static_cast<int>(i)] = bb[i];
    ExtractOutput out = extract_from_frames(frames, k, cfg, boxes);
    CHECK(out.motion.count == 0);
}

}  // TEST_SUITE

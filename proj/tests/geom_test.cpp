#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dv3/geom.hpp"
#include "test_util.hpp"

using namespace dv3;

namespace {

std::vector<float> random_points(Rng& rng, int n, bool with_duplicates) {
    std::vector<float> xyz;
    xyz.reserve(3 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (with_duplicates && i > 0 && rng.uniform() < 0.2) {
            int j = rng.uniform_int(i);
            xyz.push_back(xyz[3 * j]);
            xyz.push_back(xyz[3 * j + 1]);
            xyz.push_back(xyz[3 * j + 2]);
        } else {
            for (int a = 0; a < 3; ++a) xyz.push_back(static_cast<float>(rng.uniform(-1, 1)));
        }
    }
    return xyz;
}

}  // namespace

TEST_SUITE("geom") {

TEST_CASE("fps base cases") {
    std::vector<float> square = {0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0};

    CHECK(geom::farthest_point_sample<float>(square, 1, 2) == std::vector<int>{2});

    auto two = geom::farthest_point_sample<float>(square, 2, 0);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == 0);
    CHECK(two[1] == 3);  // opposite corner, unique max distance

    auto all = geom::farthest_point_sample<float>(square, 4, 0);
    std::vector<int> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3});

    CHECK_THROWS_AS(geom::farthest_point_sample<float>(square, 5, 0), Error);
    CHECK_THROWS_AS(geom::farthest_point_sample<float>(square, 1, 9), Error);
}

TEST_CASE("fps with k = N covers every index even under exact duplicates") {
    std::vector<float> dup = {1, 1, 1, 1, 1, 1, 1, 1, 1};  // three identical points
    auto all = geom::farthest_point_sample<float>(dup, 3, 1);
    std::vector<int> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2});
    CHECK(all[0] == 1);
}

TEST_CASE("fps matches brute-force oracle including ties") {
    Rng rng(61);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + rng.uniform_int(255);
        auto xyz = random_points(rng, n, trial % 2 == 0);
        const int k = 1 + rng.uniform_int(n);
        const int start = rng.uniform_int(n);
        CHECK(geom::farthest_point_sample<float>(xyz, k, start) ==
              testutil::fps_oracle<float>(xyz, k, start));
    }
}

TEST_CASE("fps coverage radius is non-increasing in k") {
    Rng rng(67);
    const int n = 120;
    auto xyz = random_points(rng, n, false);
    double prev = 1e100;
    for (int k = 1; k <= n; k += 7) {
        auto sel = geom::farthest_point_sample<float>(xyz, k, 0);
        double worst = 0;
        for (int i = 0; i < n; ++i) {
            double best = 1e100;
            for (int s : sel)
                best = std::min(best, static_cast<double>(geom::squared_distance<float>(
                                          std::span<const float>(xyz), i, s)));
            worst = std::max(worst, best);
        }
        CHECK(worst <= prev + 1e-12);
        prev = worst;
    }
}

TEST_CASE("ball query basics") {
    std::vector<float> pts = {0, 0, 0,  0.05f, 0, 0,  0.08f, 0, 0,
                              0.09f, 0, 0,  0.02f, 0, 0,  5, 5, 5};

    SUBCASE("no point within radius of a far center") {
        auto r = geom::ball_query<float>(pts, 5, 0.5f, 4);
        CHECK(r == std::vector<int>{5});  // only itself
    }

    SUBCASE("truncation keeps the first K by index") {
        auto r = geom::ball_query<float>(pts, 0, 0.1f, 3);
        CHECK(r == std::vector<int>{0, 1, 2});
    }

    SUBCASE("boundary point included (closed ball)") {
        std::vector<float> two = {0, 0, 0, 1, 0, 0};
        auto r = geom::ball_query<float>(two, 0, 1.0f, 8);
        CHECK(r == std::vector<int>{0, 1});
    }
}

TEST_CASE("ball query matches exhaustive scan") {
    Rng rng(71);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + rng.uniform_int(200);
        auto xyz = random_points(rng, n, false);
        const int center = rng.uniform_int(n);
        const float radius = static_cast<float>(rng.uniform(0.05, 1.5));
        const int k = 1 + rng.uniform_int(16);
        CHECK(geom::ball_query<float>(xyz, center, radius, k) ==
              testutil::ball_oracle<float>(xyz, center, radius, k));
    }
}

TEST_CASE("grouping pads by repeating the first neighbor") {
    // Two clusters; centroid 0 has exactly itself and one neighbor in range.
    std::vector<float> xyz = {0, 0, 0, 0.05f, 0, 0, 9, 9, 9};
    std::vector<float> feats = {10, 20, 30};
    std::vector<int> centroids = {0};
    GroupSpec spec{1, 0.1, 4};

    auto members = geom::group_indices<float>(xyz, centroids, spec);
    REQUIRE(members.size() == 4);
    CHECK(members[0] == 0);
    CHECK(members[1] == 1);
    CHECK(members[2] == 0);  // padding repeats the first neighbor
    CHECK(members[3] == 0);

    auto rows = geom::group_rows<float>(xyz, feats, 1, centroids, members, 4);
    REQUIRE(rows.size() == 16);
    // row 0: the centroid relative to itself with its feature
    CHECK(rows[0] == 0.0f);
    CHECK(rows[3] == 10.0f);
    // row 1: neighbor at +0.05 in x
    CHECK(rows[4] == doctest::Approx(0.05f));
    CHECK(rows[7] == 20.0f);
    // rows 2..3 repeat row 0
    CHECK(rows[8] == rows[0]);
    CHECK(rows[11] == rows[3]);
}

TEST_CASE("group rows zero out empty-ball slots") {
    std::vector<float> xyz = {0, 0, 0, 1, 1, 1};
    std::vector<float> feats = {5, 6};
    std::vector<int> centroids = {0};
    std::vector<int> members = {-1, -1};
    auto rows = geom::group_rows<float>(xyz, feats, 1, centroids, members, 2);
    for (float v : rows) CHECK(v == 0.0f);
}

TEST_CASE("neighbor at the centroid has zero relative coords") {
    std::vector<float> xyz = {0.3f, -0.2f, 0.9f, 0.3f, -0.2f, 0.9f};
    std::vector<float> feats = {1, 2};
    std::vector<int> centroids = {0};
    GroupSpec spec{1, 0.5, 2};
    auto members = geom::group_indices<float>(xyz, centroids, spec);
    auto rows = geom::group_rows<float>(xyz, feats, 1, centroids, members, 2);
    CHECK(rows[4] == 0.0f);
    CHECK(rows[5] == 0.0f);
    CHECK(rows[6] == 0.0f);
    CHECK(rows[7] == 2.0f);
}

TEST_CASE("grouping is translation equivariant") {
    Rng rng(73);
    const int n = 50;
    std::vector<double> xyz;
    for (int i = 0; i < 3 * n; ++i) xyz.push_back(rng.uniform(-1, 1));
    std::vector<double> feats(n, 0.0);
    for (auto& f : feats) f = rng.uniform(-1, 1);

    GroupSpec spec{4, 0.4, 6};
    auto centroids = geom::farthest_point_sample<double>(xyz, 4, 0);
    auto members = geom::group_indices<double>(xyz, centroids, spec);
    auto rows = geom::group_rows<double>(xyz, feats, 1, centroids, members, 6);

    std::vector<double> moved = xyz;
    for (int i = 0; i < n; ++i) {
        moved[3 * i] += 12.0;
        moved[3 * i + 1] -= 7.0;
        moved[3 * i + 2] += 3.0;
    }
    auto centroids2 = geom::farthest_point_sample<double>(moved, 4, 0);
    auto members2 = geom::group_indices<double>(moved, centroids2, spec);
    auto rows2 = geom::group_rows<double>(moved, feats, 1, centroids2, members2, 6);

    CHECK(centroids2 == centroids);
    CHECK(members2 == members);
    REQUIRE(rows2.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows2[i] == doctest::Approx(rows[i]).epsilon(1e-9));
}

}  // TEST_SUITE
